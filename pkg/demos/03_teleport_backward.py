"""
Teleporting a backward-evolving state
=====================================

Victoria measures B on a qubit with an erased past and hands it to Alice.
Alice teleports it to Bob with a shared Phi+ pair, Bob applies the usual
Pauli correction, and Victor measures A and keeps only the runs with A=a.
On those runs Victoria's outcomes follow |<B=b|A=a>|^2.
"""

from twostate import named_observable, teleport_backward_experiment
from twostate.experiments import parse_observable

sz, sx = named_observable("sigma_z"), named_observable("sigma_x")

# same observable at both ends: Victoria always gets Victor's answer
report = teleport_backward_experiment(sz, +1, sz)
print("B = A = sigma_z:", report.conditional.as_dict())

# sigma_x against sigma_z: no information, 1/2 each
report = teleport_backward_experiment(sz, +1, sx)
print("B = sigma_x:", report.conditional.as_dict())
for k, dist in report.per_bell.items():
    print(f"  Bell outcome {k}:", dist.as_dict())

# an oblique axis, with a sampled run alongside the exact one
tilted = parse_observable("axis:1,0,1")
report = teleport_backward_experiment(sz, +1, tilted, shots=100_000, seed=1)
print("tilted B, exact:  ", report.conditional.as_dict())
print("tilted B, sampled:", report.sampled.conditional("victoria").as_dict())
print("largest deviation in standard errors:", round(report.sampled_deviation_in_sigmas(), 2))
print("corrections:", report.corrections)

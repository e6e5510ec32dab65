"""
Flipping the direction of time
==============================

Post-select one half of a singlet on a bra <chi|.  The other half is left in
a forward-evolving state: the flip of chi.  The reverse trick works only on
one Bell outcome out of four.
"""

import numpy as np

from twostate import BackwardState, enumerate_branches, flip_backward_to_forward
from twostate.protocols import flip_forward_attempt, flip_timeline, flip_via_singlet
from twostate.states import DOWN, UP

print("flip <up|   =", flip_backward_to_forward(UP.dual()).vector)
print("flip <down| =", flip_backward_to_forward(DOWN.dual()).vector)

rng = np.random.default_rng(0)
v = rng.normal(size=2) + 1j * rng.normal(size=2)
chi = BackwardState(v / np.linalg.norm(v))
flipped = flip_backward_to_forward(chi)
print("fidelity with the singlet partner:", flipped.fidelity(flip_via_singlet(chi)))
print("<chi|flip(chi)> =", chi.apply(flipped))

# the engine agrees: testing the ancilla for flip(chi) always says yes
print("check:", enumerate_branches(flip_timeline(chi)).conditional("check").as_dict())

# forward to backward: a Bell measurement on system and ancilla
report = flip_forward_attempt(flipped)
print("Bell outcome probabilities:", report.probabilities)
print("outcomes that succeed:", report.succeeded)
print("success probability:", report.success_probability)

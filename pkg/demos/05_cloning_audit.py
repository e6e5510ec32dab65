"""
Cloning backward states would signal into the past
==================================================

Pairs are measured at an earlier time, half in the z basis and half in the x
basis.  A later choice between sigma_z and sigma_x should not change those
earlier statistics.  With a physical channel it never does; with an ideal
cloner of backward states it does, by a trace distance of 1/2.
"""

import numpy as np

from twostate import Channel, cloning_signaling_audit, ideal_backward_cloner
from twostate.protocols import random_cptp_channel

report = cloning_signaling_audit(ideal_backward_cloner())
print("ideal cloner, physical:", report.physical)
for (half, choice), p in report.statistics.items():
    print(f"  earlier {half} pairs, later {choice}:", p.reshape(-1))
print("trace distance:", report.trace_distance)

print("identity channel:", cloning_signaling_audit(Channel.identity()).trace_distance)

rng = np.random.default_rng(0)
worst = max(cloning_signaling_audit(random_cptp_channel(rng)).trace_distance for _ in range(100))
print("worst of 100 random CPTP channels:", worst)

"""
Erasing the past
================

Entangle a qubit maximally with an ancilla that nobody touches.  Whatever
was done to the qubit before is now irrelevant: intermediate statistics
depend only on the later post-selection.
"""

import numpy as np

from twostate import ForwardState, abl_generalized, born, enumerate_branches, erase_past, named_observable
from twostate.protocols import erasure_timeline

state, token = erase_past(2)
print(state)

sx, sz = named_observable("sigma_x"), named_observable("sigma_z")
plus = ForwardState(np.array([1, 1]) / np.sqrt(2))

# post-selected on <+|: sigma_x in between gives +1 every time
print("sigma_x:", abl_generalized(state, plus.dual(), sx).as_dict())
# sigma_z in between is a coin toss, |<+|0>|^2 = 1/2
print("sigma_z:", abl_generalized(state, plus.dual(), sz).as_dict())

# the backward state on its own, read as a Born rule, gives the same numbers
print("born on |+>:", born(plus, sz).as_dict())

# and so does the full timeline, with the ancilla guarded
run = enumerate_branches(erasure_timeline(plus.dual(), sx))
print("engine:", run.conditional("mid").as_dict())

# without post-selection the intermediate outcome is uniform
print("unselected:", enumerate_branches(erasure_timeline(plus.dual(), sx).without_postselection()).conditional("mid").as_dict())

"""
Three boxes
===========

A ball is prepared in an equal superposition of three boxes and later found
in a particular superposition.  In between, opening box 1 finds it with
certainty, and so does opening box 2.
"""

import numpy as np

from twostate import ForwardState, Observable, abl, enumerate_branches
from twostate.experiments import three_box_timeline

# pre-selection (|1>+|2>+|3>)/sqrt3, post-selection (<1|+<2|-<3|)/sqrt3
pre = ForwardState(np.ones(3) / np.sqrt(3))
post = ForwardState(np.array([1, 1, -1]) / np.sqrt(3)).dual()

# "is the ball in box k?" is a two-outcome question: eigenvalue 1 on |k>
for k in range(3):
    box = Observable.projector_onto(ForwardState(np.eye(3)[k]))
    print(f"box {k + 1}: p(found) = {abl(pre, post, box)[1]:.12f}")

# the same numbers from brute-force branch enumeration of the whole timeline
run = enumerate_branches(three_box_timeline(1))
print(run.conditional("box1").as_dict())
print("fraction of runs that survive the post-selection:", run.postselection_probability)

"""Simulation of pre- and post-selected quantum systems.

Forward and backward evolving states, ABL probabilities, an exact
branch-enumerating timeline engine, and protocols for erasing the past,
teleporting and flipping backward states, and auditing would-be cloners
for signaling into the past.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    EmptyEnsemble,
    GuardViolation,
    InconsistentSelection,
    TwoStateError,
    ValidationError,
)
from .linalg import Ket, LinearOp, eigensystem, partial_trace, tensor  # noqa: E402
from .measure import (  # noqa: E402
    Observable,
    OutcomeDistribution,
    abl,
    abl_generalized,
    born,
    named_observable,
    sequential_oracle,
)
from .protocols import (  # noqa: E402
    Channel,
    cloning_signaling_audit,
    erase_past,
    flip_backward_to_forward,
    ideal_backward_cloner,
    teleport_backward_experiment,
)
from .states import (  # noqa: E402
    BackwardState,
    DensityOp,
    ForwardState,
    TwoStateVector,
    bell_basis,
    maximally_entangled,
    singlet,
)
from .timeline import (  # noqa: E402
    Guard,
    Measure,
    Postselect,
    Preselect,
    Timeline,
    Unitary,
    enumerate_branches,
    sample,
    validate,
)

__all__ = [
    "BackwardState",
    "Channel",
    "DensityOp",
    "EmptyEnsemble",
    "ForwardState",
    "Guard",
    "GuardViolation",
    "InconsistentSelection",
    "Ket",
    "LinearOp",
    "Measure",
    "Observable",
    "OutcomeDistribution",
    "Postselect",
    "Preselect",
    "Timeline",
    "TwoStateError",
    "TwoStateVector",
    "Unitary",
    "ValidationError",
    "abl",
    "abl_generalized",
    "bell_basis",
    "born",
    "cloning_signaling_audit",
    "eigensystem",
    "enumerate_branches",
    "erase_past",
    "flip_backward_to_forward",
    "ideal_backward_cloner",
    "maximally_entangled",
    "named_observable",
    "partial_trace",
    "sample",
    "sequential_oracle",
    "singlet",
    "teleport_backward_experiment",
    "tensor",
    "validate",
]

"""Forward- and backward-evolving states, two-state vectors and density operators.

Conjugation convention
----------------------
A :class:`BackwardState` stores the coefficient vector ``c`` of its bra, so
the backward state ``sum_j c_j <j|`` acting on a ket ``v`` gives
``sum_j c_j v_j`` with no conjugation.  The only place where a conjugate is
taken is the bra/ket duality: :meth:`BackwardState.ket` returns ``conj(c)``
and :meth:`ForwardState.dual` returns the bra of a ket.  A post-selection
whose outcome is the ket ``|A=a>`` therefore leaves the backward state
``ForwardState(|A=a>).dual()``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadDimension, DimMismatch, InconsistentSelection, NotNormalized
from .linalg import HERMITIAN_TOL, Ket, LinearOp, trace_distance

NORM_TOL = 1e-12
ORTHOGONALITY_TOL = 1e-12


def _normalized_ket(amplitudes, dims, normalize: bool) -> Ket:
    ket = amplitudes if isinstance(amplitudes, Ket) else Ket(amplitudes, dims)
    if dims is not None and isinstance(amplitudes, Ket) and tuple(dims) != ket.dims:
        ket = Ket(ket.amplitudes, dims)
    if normalize:
        return ket.normalized()
    if abs(ket.norm() - 1.0) > NORM_TOL:
        raise NotNormalized(f"state has norm {ket.norm():.15g}")
    return ket


@dataclass(frozen=True, eq=False)
class ForwardState:
    """A normalized ket evolving forward in time."""

    ket: Ket

    def __init__(self, amplitudes, dims: Sequence[int] | None = None, *, normalize=False):
        object.__setattr__(self, "ket", _normalized_ket(amplitudes, dims, normalize))

    @property
    def vector(self) -> np.ndarray:
        return self.ket.amplitudes

    @property
    def dims(self) -> tuple[int, ...]:
        return self.ket.dims

    def dual(self) -> BackwardState:
        """The backward state whose bra is ``<self|``."""
        return BackwardState(self.vector.conj(), self.dims)

    def density(self) -> DensityOp:
        return DensityOp(self.ket.projector())

    def fidelity(self, other: ForwardState) -> float:
        return float(abs(np.vdot(self.vector, other.vector)) ** 2)

    def __repr__(self) -> str:
        return f"ForwardState({np.array2string(self.vector, precision=4)}, dims={self.dims})"


@dataclass(frozen=True, eq=False)
class BackwardState:
    """A normalized bra evolving backward in time (coefficients stored as given)."""

    bra: Ket

    def __init__(self, coefficients, dims: Sequence[int] | None = None, *, normalize=False):
        object.__setattr__(self, "bra", _normalized_ket(coefficients, dims, normalize))

    @property
    def coefficients(self) -> np.ndarray:
        return self.bra.amplitudes

    @property
    def dims(self) -> tuple[int, ...]:
        return self.bra.dims

    def ket(self) -> ForwardState:
        """The ket ``|chi>`` with ``<chi| == self``."""
        return ForwardState(self.coefficients.conj(), self.dims)

    def apply(self, state) -> complex:
        """The scalar ``<self|v>`` for a ForwardState, Ket or raw vector ``v``."""
        v = state.vector if isinstance(state, ForwardState) else (
            state.amplitudes if isinstance(state, Ket) else np.asarray(state)
        )
        if v.shape[-1] != self.coefficients.size:
            raise DimMismatch(f"bra of length {self.coefficients.size} applied to {v.shape}")
        return complex(self.coefficients @ v)

    def __repr__(self) -> str:
        return f"BackwardState({np.array2string(self.coefficients, precision=4)}, dims={self.dims})"


@dataclass(frozen=True, eq=False)
class TwoStateVector:
    """The pair ``<backward| |forward>`` describing a pre- and post-selected system."""

    backward: BackwardState
    forward: ForwardState

    def __post_init__(self):
        if self.backward.dims != self.forward.dims:
            raise DimMismatch(
                f"backward dims {self.backward.dims} differ from forward dims {self.forward.dims}"
            )
        if abs(self.overlap()) <= ORTHOGONALITY_TOL:
            raise InconsistentSelection("pre- and post-selected states are orthogonal")

    def overlap(self) -> complex:
        return self.backward.apply(self.forward)


@dataclass(frozen=True, eq=False)
class DensityOp:
    """Hermitian, positive semidefinite, unit-trace operator."""

    op: LinearOp

    def __post_init__(self):
        if not self.op.is_hermitian():
            raise ValueError(f"density operator not Hermitian ({self.op.hermiticity_error():.3g})")
        low = float(np.linalg.eigvalsh(self.op.matrix).min())
        if low < -HERMITIAN_TOL:
            raise ValueError(f"density operator has negative eigenvalue {low:.3g}")
        if abs(self.op.trace() - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"density operator has trace {self.op.trace():.15g}")

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int]) -> DensityOp:
        d = int(np.prod(dims))
        return cls(LinearOp(np.eye(d) / d, dims))

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dims(self) -> tuple[int, ...]:
        return self.op.dims

    def distance(self, other: DensityOp) -> float:
        return trace_distance(self.op, other.op)


def basis_state(d: int, j: int) -> ForwardState:
    v = np.zeros(d, dtype=complex)
    v[j] = 1.0
    return ForwardState(v)


def maximally_entangled(d: int) -> ForwardState:
    """``sum_j |j>|j> / sqrt(d)`` on system (first) and ancilla (second)."""
    if d < 2:
        raise BadDimension(f"maximally entangled state needs d >= 2, got {d}")
    v = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return ForwardState(v, (d, d))


_S = 1.0 / np.sqrt(2.0)
UP = ForwardState([1.0, 0.0])
DOWN = ForwardState([0.0, 1.0])
PLUS = ForwardState([_S, _S])
MINUS = ForwardState([_S, -_S])


def singlet() -> ForwardState:
    """``(|up,down> - |down,up>) / sqrt(2)``."""
    return ForwardState([0.0, _S, -_S, 0.0], (2, 2))


def bell_basis() -> list[ForwardState]:
    """Bell states in the fixed order Phi+, Phi-, Psi+, Psi-.

    Phi+- = (|00> +- |11>)/sqrt2 and Psi+- = (|01> +- |10>)/sqrt2; every
    teleportation correction in the package assumes exactly these phases.
    """
    return [
        ForwardState([_S, 0.0, 0.0, _S], (2, 2)),
        ForwardState([_S, 0.0, 0.0, -_S], (2, 2)),
        ForwardState([0.0, _S, _S, 0.0], (2, 2)),
        singlet(),
    ]


BELL_NAMES = ("phi_plus", "phi_minus", "psi_plus", "psi_minus")

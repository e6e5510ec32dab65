"""Observables and outcome probabilities for pre- and post-selected systems.

``born`` handles pre-selection only, ``abl`` a pure pre/post pair, and
``abl_generalized`` a system pre-selected entangled with an untouched
ancilla and post-selected on the system alone.  ``sequential_oracle``
reaches the same numbers by enumerating measurement branches on a
:class:`~twostate.timeline.Timeline`, without using any of the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimMismatch, InconsistentSelection
from .linalg import (
    DEFAULT_GROUP_TOL,
    HermitianEigensystem,
    LinearOp,
    eigensystem,
)
from .states import BackwardState, ForwardState, bell_basis

#: Below this total weight a pre/post pair is declared inconsistent.
DENOMINATOR_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class Observable:
    """A projective measurement: ascending eigenvalues and eigenspace projectors.

    ``name`` remembers a named constant (``"sigma_z"``, ``"bell"``...) and
    ``origin`` the data it was built from (``("matrix", m)`` or
    ``("projector", state)``), so that scenario documents can be written back
    exactly as they were read.
    """

    eigenvalues: tuple[float, ...]
    projectors: tuple[LinearOp, ...]
    name: str | None = None
    origin: tuple | None = None

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.projectors) or not self.projectors:
            raise ValueError("need one projector per eigenvalue")
        if any(b <= a for a, b in zip(self.eigenvalues, self.eigenvalues[1:])):
            raise ValueError(f"eigenvalues must be strictly ascending: {self.eigenvalues}")
        dims = self.projectors[0].dims
        if any(p.dims != dims for p in self.projectors):
            raise DimMismatch("projectors act on different spaces")
        total = sum(p.matrix for p in self.projectors)
        if np.max(np.abs(total - np.eye(total.shape[0]))) > 1e-10:
            raise ValueError("projectors do not resolve the identity")

    @classmethod
    def from_matrix(
        cls,
        matrix,
        dims: Sequence[int] | None = None,
        *,
        name: str | None = None,
        group_tol: float = DEFAULT_GROUP_TOL,
    ) -> Observable:
        op = matrix if isinstance(matrix, LinearOp) else LinearOp(matrix, dims)
        if dims is not None and tuple(dims) != op.dims:
            op = LinearOp(op.matrix, dims)
        es = eigensystem(op, group_tol)
        return cls(es.eigenvalues, es.projectors, name, ("matrix", op.matrix))

    @classmethod
    def from_basis(cls, states: Sequence[ForwardState], eigenvalues=None, *, name=None):
        """Non-degenerate observable diagonal in an orthonormal basis."""
        if eigenvalues is None:
            eigenvalues = range(len(states))
        projectors = tuple(s.ket.projector() for s in states)
        return cls(tuple(float(e) for e in eigenvalues), projectors, name)

    @classmethod
    def projector_onto(cls, state: ForwardState, *, name=None) -> Observable:
        """Two-outcome test for ``state``: eigenvalue 1 on it, 0 on its complement."""
        p = state.ket.projector()
        rest = LinearOp(np.eye(p.dim) - p.matrix, p.dims)
        return cls((0.0, 1.0), (rest, p), name, ("projector", state))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.projectors[0].dims

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    @property
    def matrix(self) -> np.ndarray:
        return sum(lam * p.matrix for lam, p in zip(self.eigenvalues, self.projectors))

    def eigensystem(self) -> HermitianEigensystem:
        return HermitianEigensystem(self.eigenvalues, self.projectors)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def index_of(self, value: float, tol: float = 1e-9) -> int:
        for i, lam in enumerate(self.eigenvalues):
            if abs(lam - value) <= tol:
                return i
        raise ValueError(f"{value} is not an eigenvalue of {self.eigenvalues}")

    def conjugated(self, unitary: np.ndarray) -> Observable:
        """The observable ``U B U^dagger``."""
        u = np.asarray(unitary)
        ps = tuple(LinearOp(u @ p.matrix @ u.conj().T, p.dims) for p in self.projectors)
        return Observable(self.eigenvalues, ps)


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Probabilities of the outcomes of one measurement, ascending by eigenvalue."""

    eigenvalues: tuple[float, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)

    @property
    def labels(self) -> list[tuple[float, int]]:
        return [(lam, i) for i, lam in enumerate(self.eigenvalues)]

    def __getitem__(self, index: int) -> float:
        return float(self.probabilities[index])

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def prob(self, eigenvalue: float, tol: float = 1e-9) -> float:
        for lam, p in zip(self.eigenvalues, self.probabilities):
            if abs(lam - eigenvalue) <= tol:
                return float(p)
        raise KeyError(eigenvalue)

    def as_dict(self) -> dict[float, float]:
        return {lam: float(p) for lam, p in zip(self.eigenvalues, self.probabilities)}


def _normalize(weights: np.ndarray, obs: Observable) -> OutcomeDistribution:
    total = float(weights.sum())
    if total <= DENOMINATOR_TOL:
        raise InconsistentSelection(
            f"pre- and post-selection leave total weight {total:.3g}; the ensemble is empty"
        )
    return OutcomeDistribution(obs.eigenvalues, weights / total)


def born(state: ForwardState, obs: Observable) -> OutcomeDistribution:
    """``p_n = ||P_n psi||^2``."""
    if len(state.vector) != obs.dim:
        raise DimMismatch(f"observable dims {obs.dims} do not match state dims {state.dims}")
    psi = state.vector
    w = np.array([np.linalg.norm(p.matrix @ psi) ** 2 for p in obs.projectors])
    return OutcomeDistribution(obs.eigenvalues, w / w.sum())


def abl(pre: ForwardState, post: BackwardState, obs: Observable) -> OutcomeDistribution:
    """Intermediate outcome probabilities ``|<phi|P_n|psi>|^2`` normalized over ``n``."""
    if len(pre.vector) != obs.dim or len(post.coefficients) != obs.dim:
        raise DimMismatch(
            f"observable dims {obs.dims} do not match pre {pre.dims} / post {post.dims}"
        )
    w = np.array([abs(post.apply(p.matrix @ pre.vector)) ** 2 for p in obs.projectors])
    return _normalize(w, obs)


def abl_generalized(
    ent_pre: ForwardState, post: BackwardState, obs: Observable
) -> OutcomeDistribution:
    """Outcome probabilities with the system pre-selected entangled with an ancilla.

    ``ent_pre`` lives on system (first factor) times ancilla; ``post`` and
    ``obs`` act on the system only.  Each weight is
    ``||P_post P_n |Psi>||^2`` with both projectors on the system factor.
    """
    if len(ent_pre.dims) != 2:
        raise DimMismatch(f"expected a system-ancilla state, got dims {ent_pre.dims}")
    ds, da = ent_pre.dims
    if obs.dim != ds or len(post.coefficients) != ds:
        raise DimMismatch(
            f"system dimension {ds} does not match observable {obs.dims} or post {post.dims}"
        )
    psi = ent_pre.vector.reshape(ds, da)
    w = np.empty(len(obs))
    for n, p in enumerate(obs.projectors):
        # <a| (P_n (x) 1) Psi leaves a vector on the ancilla; |a> is unit norm
        anc = post.coefficients @ (p.matrix @ psi)
        w[n] = np.linalg.norm(anc) ** 2
    return _normalize(w, obs)


def sequential_oracle(timeline) -> dict[str, OutcomeDistribution]:
    """Conditional distribution of every measurement, by exhaustive branch enumeration."""
    from .timeline import enumerate_branches

    return enumerate_branches(timeline).distributions


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def bell_observable() -> Observable:
    """Bell measurement; eigenvalue k labels the k-th state of :func:`bell_basis`."""
    return Observable.from_basis(bell_basis(), name="bell")


def named_observable(name: str) -> Observable:
    if name == "bell":
        return bell_observable()
    mats = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}
    if name not in mats:
        raise KeyError(name)
    return Observable.from_matrix(mats[name], name=name)

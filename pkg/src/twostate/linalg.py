"""Dense complex linear algebra on small tensor-product Hilbert spaces.

Every value here is a thin immutable wrapper around a numpy array plus the
list of subsystem dimensions.  Subsystem 0 is the most significant factor of
the Kronecker product, so ``|01>`` over dims ``(2, 2)`` has amplitude index 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import BadDimension, BadSubsystem, DimMismatch, NotHermitian

#: Largest total Hilbert-space dimension accepted anywhere in the package.
MAX_DIMENSION = 2**10

HERMITIAN_TOL = 1e-10
DEFAULT_GROUP_TOL = 1e-8


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.flags.writeable = False
    return out


def _check_dims(dims: Sequence[int], size: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise BadDimension(f"subsystem dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != size:
        raise DimMismatch(f"dims {dims} do not multiply to {size}")
    if size > MAX_DIMENSION:
        raise BadDimension(f"total dimension {size} exceeds cap {MAX_DIMENSION}")
    return dims


@dataclass(frozen=True, eq=False)
class Ket:
    """Complex amplitude vector over ``dims`` (not necessarily normalized)."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, amplitudes, dims: Sequence[int] | None = None):
        amps = _frozen(amplitudes).reshape(-1)
        if dims is None:
            dims = (amps.size,)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", _check_dims(dims, amps.size))

    def __len__(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> Ket:
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return Ket(self.amplitudes / n, self.dims)

    def projector(self) -> LinearOp:
        v = self.amplitudes
        return LinearOp(np.outer(v, v.conj()), self.dims)

    def allclose(self, other: Ket, atol: float = 1e-12) -> bool:
        return self.dims == other.dims and np.allclose(
            self.amplitudes, other.amplitudes, rtol=0.0, atol=atol
        )


@dataclass(frozen=True, eq=False)
class LinearOp:
    """Square complex matrix acting on the tensor space described by ``dims``."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, matrix, dims: Sequence[int] | None = None):
        m = _frozen(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimMismatch(f"operator must be a square matrix, got shape {m.shape}")
        if dims is None:
            dims = (m.shape[0],)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", _check_dims(dims, m.shape[0]))

    @classmethod
    def identity(cls, dims: Sequence[int] | int) -> LinearOp:
        dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
        return cls(np.eye(int(np.prod(dims))), dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> LinearOp:
        return LinearOp(self.matrix.conj().T, self.dims)

    def __matmul__(self, other):
        if isinstance(other, LinearOp):
            if other.dim != self.dim:
                raise DimMismatch(f"cannot compose {self.dims} with {other.dims}")
            return LinearOp(self.matrix @ other.matrix, self.dims)
        if isinstance(other, Ket):
            if len(other) != self.dim:
                raise DimMismatch(f"cannot apply {self.dims} to ket with {other.dims}")
            return Ket(self.matrix @ other.amplitudes, other.dims)
        return NotImplemented

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_error() <= tol

    def is_unitary(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        return bool(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))) <= tol)

    def allclose(self, other: LinearOp, atol: float = 1e-12) -> bool:
        return self.dims == other.dims and np.allclose(
            self.matrix, other.matrix, rtol=0.0, atol=atol
        )


@dataclass(frozen=True, eq=False)
class HermitianEigensystem:
    """Distinct eigenvalues in ascending order with their eigenspace projectors."""

    eigenvalues: tuple[float, ...]
    projectors: tuple[LinearOp, ...]

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> LinearOp:
        m = sum(lam * p.matrix for lam, p in zip(self.eigenvalues, self.projectors))
        return LinearOp(m, self.projectors[0].dims)


def tensor(a, b):
    """Kronecker product of two kets or two operators; dims concatenate."""
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(np.kron(a.amplitudes, b.amplitudes), a.dims + b.dims)
    if isinstance(a, LinearOp) and isinstance(b, LinearOp):
        return LinearOp(np.kron(a.matrix, b.matrix), a.dims + b.dims)
    raise TypeError(
        f"tensor needs two Kets or two LinearOps, got {type(a).__name__} "
        f"and {type(b).__name__}"
    )


def tensor_all(items):
    return reduce(tensor, items)


def eigensystem(op: LinearOp, group_tol: float = DEFAULT_GROUP_TOL) -> HermitianEigensystem:
    """Grouped spectral decomposition of a Hermitian operator.

    Neighbouring eigenvalues closer than ``group_tol`` share one eigenspace;
    the reported eigenvalue of a group is the mean of its members.
    """
    err = op.hermiticity_error()
    if err > HERMITIAN_TOL:
        raise NotHermitian(f"operator deviates from its adjoint by {err:.3g}")
    m = 0.5 * (op.matrix + op.matrix.conj().T)
    values, vectors = np.linalg.eigh(m)

    groups: list[list[int]] = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > group_tol:
            groups.append([i])
        else:
            groups[-1].append(i)

    eigenvalues = []
    projectors = []
    for g in groups:
        v = vectors[:, g]
        eigenvalues.append(float(np.mean(values[g])))
        projectors.append(LinearOp(v @ v.conj().T, op.dims))
    return HermitianEigensystem(tuple(eigenvalues), tuple(projectors))


def _check_targets(dims: Sequence[int], targets: Sequence[int]) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    n = len(dims)
    if any(t < 0 or t >= n for t in targets):
        raise BadSubsystem(f"subsystem index out of range 0..{n - 1}: {targets}")
    if len(set(targets)) != len(targets):
        raise BadSubsystem(f"repeated subsystem index in {targets}")
    return targets


def partial_trace(op: LinearOp, keep) -> LinearOp:
    """Trace out every subsystem not in ``keep``; kept ones stay in original order."""
    dims = op.dims
    keep = sorted(_check_targets(dims, keep))
    n = len(dims)
    t = op.matrix.reshape(dims + dims)
    row = list(range(n))
    # kept subsystems get fresh column indices, traced ones share row indices
    col = [n + i if i in keep else i for i in range(n)]
    out = keep + [n + i for i in keep]
    reduced = np.einsum(t, row + col, out)
    kept_dims = tuple(dims[i] for i in keep)
    d = int(np.prod(kept_dims)) if kept_dims else 1
    return LinearOp(reduced.reshape(d, d), kept_dims or (1,))


def embed(op: LinearOp, dims: Sequence[int], targets: Sequence[int]) -> LinearOp:
    """Lift ``op`` acting on ``targets`` (in that order) to the full space ``dims``."""
    dims = tuple(dims)
    targets = _check_targets(dims, targets)
    target_dims = tuple(dims[t] for t in targets)
    if int(np.prod(target_dims)) != op.dim:
        raise DimMismatch(
            f"operator of dimension {op.dim} cannot act on subsystems {targets} "
            f"with dims {target_dims}"
        )
    rest = [i for i in range(len(dims)) if i not in targets]
    rest_dims = tuple(dims[i] for i in rest)
    full = np.kron(op.matrix, np.eye(int(np.prod(rest_dims)) if rest_dims else 1))
    # axes of `full` are ordered (targets, rest) for rows and for columns
    order = list(targets) + rest
    n = len(dims)
    t = full.reshape(target_dims + rest_dims + target_dims + rest_dims)
    inverse = np.argsort(order)
    t = t.transpose(list(inverse) + [n + i for i in inverse])
    d = int(np.prod(dims))
    return LinearOp(t.reshape(d, d), dims)


def permute(ket: Ket, order: Sequence[int]) -> Ket:
    """Reorder subsystems so that new subsystem ``i`` is old subsystem ``order[i]``."""
    order = _check_targets(ket.dims, order)
    if len(order) != len(ket.dims):
        raise BadSubsystem(f"permutation {order} does not cover {len(ket.dims)} subsystems")
    t = ket.amplitudes.reshape(ket.dims).transpose(order)
    return Ket(t.reshape(-1), tuple(ket.dims[i] for i in order))


def trace_distance(a: LinearOp, b: LinearOp) -> float:
    """Half the trace norm of ``a - b`` for Hermitian arguments."""
    diff = a.matrix - b.matrix
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (z + z.conj().T)

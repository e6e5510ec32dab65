"""Gedanken protocols for backward-evolving states.

* :func:`erase_past` entangles a system with a guarded ancilla so that
  intermediate statistics depend only on the later post-selection.
* :func:`teleport_backward_experiment` runs the four-party chain
  (Victoria, Alice, Bob, Victor) and reports Victoria's retrodicted
  statistics.
* :func:`flip_backward_to_forward` turns a qubit bra into the forward state
  an EPR partner ends up in; :func:`flip_forward_attempt` shows why the
  reverse only works on one Bell outcome.
* :func:`cloning_signaling_audit` checks whether a two-qubit map lets a later
  measurement choice change earlier statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import BadDimension, DimMismatch, InconsistentSelection, NotCPTP
from .linalg import LinearOp, random_unitary, trace_distance
from .measure import (
    DENOMINATOR_TOL,
    SIGMA_X,
    SIGMA_Z,
    Observable,
    OutcomeDistribution,
    bell_observable,
    named_observable,
)
from .states import (
    DOWN,
    MINUS,
    PLUS,
    UP,
    BackwardState,
    DensityOp,
    ForwardState,
    bell_basis,
    maximally_entangled,
    singlet,
)
from .timeline import (
    Factor,
    Guard,
    Measure,
    Postselect,
    Preselect,
    RunResult,
    Timeline,
    Unitary,
    enumerate_branches,
    sample,
)

COMPLETENESS_TOL = 1e-10

# ---------------------------------------------------------------- channels


@dataclass(frozen=True, eq=False)
class Channel:
    """A map given by Kraus operators.

    Physical channels must satisfy ``sum K^dagger K = 1``.  Non-physical maps
    (post-selected, trace-decreasing) skip that check and may additionally be
    *future-controlled*: ``future_controlled[choice]`` is the Kraus set used
    when the later measurement is ``choice``.
    """

    kraus: tuple[LinearOp, ...]
    physical: bool = True
    future_controlled: Mapping[str, tuple[LinearOp, ...]] | None = None
    name: str | None = None

    def __post_init__(self):
        ks = tuple(k if isinstance(k, LinearOp) else LinearOp(k) for k in self.kraus)
        object.__setattr__(self, "kraus", ks)
        if not ks or all(np.allclose(k.matrix, 0) for k in ks):
            raise ValueError("a channel needs at least one nonzero Kraus operator")
        if len({k.dim for k in ks}) != 1:
            raise DimMismatch("Kraus operators have different dimensions")
        if self.physical:
            if self.future_controlled:
                raise NotCPTP("a map controlled by a future measurement cannot be physical")
            err = self.completeness_error()
            if err > COMPLETENESS_TOL:
                raise NotCPTP(f"sum of K^dagger K deviates from identity by {err:.3g}")

    @classmethod
    def identity(cls, dims: Sequence[int] = (2, 2)) -> Channel:
        return cls((LinearOp.identity(dims),), name="identity")

    @property
    def dim(self) -> int:
        return self.kraus[0].dim

    def completeness_error(self, choice: str | None = None) -> float:
        ks = self.kraus_for(choice)
        total = sum(k.matrix.conj().T @ k.matrix for k in ks)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def kraus_for(self, choice: str | None = None) -> tuple[LinearOp, ...]:
        if choice is not None and self.future_controlled and choice in self.future_controlled:
            return tuple(self.future_controlled[choice])
        return self.kraus

    def apply(self, rho: np.ndarray, choice: str | None = None) -> np.ndarray:
        return sum(k.matrix @ rho @ k.matrix.conj().T for k in self.kraus_for(choice))


def random_cptp_channel(rng: np.random.Generator, dim: int = 4, n_kraus: int | None = None) -> Channel:
    """Random channel from a Haar-random Stinespring isometry."""
    if n_kraus is None:
        n_kraus = int(rng.integers(1, dim * dim + 1))
    v = random_unitary(dim * n_kraus, rng)[:, :dim]
    kraus = tuple(LinearOp(v[i * dim:(i + 1) * dim, :]) for i in range(n_kraus))
    return Channel(kraus, name="random-cptp")


LATER_CHOICES = ("sigma_z", "sigma_x")
_BASES = {"sigma_z": (UP, DOWN), "sigma_x": (PLUS, MINUS)}


def ideal_backward_cloner() -> Channel:
    """Post-selected map that copies the later measurement's basis state onto both qubits.

    For later basis ``{|e_k>}`` the Kraus set is ``{|e_k e_k><e_k e_k|}``: the
    backward state ``<e_k|`` created on the first qubit propagates to
    ``<e_k|<e_k|`` on the pair.  The map is trace-decreasing and depends on
    the future choice, so it is flagged non-physical.
    """
    sets = {}
    for choice, basis in _BASES.items():
        sets[choice] = tuple(
            LinearOp(np.outer(np.kron(e.vector, e.vector), np.kron(e.vector, e.vector).conj()), (2, 2))
            for e in basis
        )
    return Channel(sets["sigma_z"], physical=False, future_controlled=sets, name="ideal-cloner")


@dataclass(frozen=True, eq=False)
class SignalingReport:
    """Earlier-time pair statistics under each later measurement choice.

    ``statistics[(half, choice)]`` is a 2x2 array ``p(o1, o2)`` for the
    sub-ensemble measured in basis ``half`` at the earlier time, given the
    later ``choice``; index 0 is the +1 eigenstate.  ``joint`` adds the later
    outcome as a third axis.
    """

    statistics: dict[tuple[str, str], np.ndarray]
    joint: dict[tuple[str, str], np.ndarray]
    survival: dict[tuple[str, str], float]
    half_distances: dict[str, float]
    trace_distance: float
    physical: bool
    channel: str | None = None


def _earlier_mixture(stats: Mapping[str, np.ndarray]) -> np.ndarray:
    """Block-diagonal state of the whole ensemble: half label (x) pair state."""
    blocks = []
    for half in LATER_CHOICES:
        basis = _BASES[half]
        rho = np.zeros((4, 4), dtype=complex)
        for o1 in range(2):
            for o2 in range(2):
                v = np.kron(basis[o1].vector, basis[o2].vector)
                rho += stats[half][o1, o2] * np.outer(v, v.conj())
        blocks.append(0.5 * rho)
    out = np.zeros((8, 8), dtype=complex)
    out[:4, :4], out[4:, 4:] = blocks
    return out


def cloning_signaling_audit(candidate: Channel, initial: DensityOp | None = None) -> SignalingReport:
    """Does a later sigma_z / sigma_x choice change earlier pair statistics?

    Half of the pairs are measured in the z basis and half in the x basis at
    the earlier time; then ``candidate`` acts; then the first particle is
    measured in the later basis.  Each half is an exact sub-ensemble.
    """
    if candidate.dim != 4:
        raise DimMismatch(f"the audit needs a two-qubit map, got dimension {candidate.dim}")
    rho0 = (initial or DensityOp.maximally_mixed((2, 2))).matrix

    statistics, joint, survival = {}, {}, {}
    for half in LATER_CHOICES:
        basis = _BASES[half]
        for choice in LATER_CHOICES:
            later = [np.kron(np.outer(e.vector, e.vector.conj()), np.eye(2)) for e in _BASES[choice]]
            w = np.zeros((2, 2, 2))
            for o1 in range(2):
                for o2 in range(2):
                    v = np.kron(basis[o1].vector, basis[o2].vector)
                    proj = np.outer(v, v.conj())
                    sigma = candidate.apply(proj @ rho0 @ proj, choice)
                    for m, q in enumerate(later):
                        w[o1, o2, m] = np.real(np.trace(q @ sigma))
            total = w.sum()
            survival[(half, choice)] = float(total)
            if total <= DENOMINATOR_TOL:
                raise InconsistentSelection(f"map annihilates the {half} half under later {choice}")
            joint[(half, choice)] = w / total
            statistics[(half, choice)] = w.sum(axis=2) / total

    half_distances = {
        half: 0.5 * float(np.abs(statistics[(half, "sigma_z")] - statistics[(half, "sigma_x")]).sum())
        for half in LATER_CHOICES
    }
    mix = {c: _earlier_mixture({h: statistics[(h, c)] for h in LATER_CHOICES}) for c in LATER_CHOICES}
    distance = trace_distance(LinearOp(mix["sigma_z"]), LinearOp(mix["sigma_x"]))
    return SignalingReport(
        statistics=statistics,
        joint=joint,
        survival=survival,
        half_distances=half_distances,
        trace_distance=min(max(distance, 0.0), 1.0),
        physical=candidate.physical,
        channel=candidate.name,
    )


def audit_timeline(half: str, choice: str, unitary: np.ndarray | None = None) -> Timeline:
    """The audit arrangement for a unitary interaction, as an engine timeline.

    Both particles start maximally mixed (each entangled with a guarded
    reference qubit).
    """
    mx = maximally_entangled(2)
    events = [
        Preselect((Factor(("ref1", "p1"), mx, "max_entangled"), Factor(("p2", "ref2"), mx, "max_entangled"))),
        Guard(("ref1", "ref2")),
        Measure(named_observable(half), ("p1",), "t1_first"),
        Measure(named_observable(half), ("p2",), "t1_second"),
    ]
    if unitary is not None:
        events.append(Unitary.single(("p1", "p2"), LinearOp(unitary, (2, 2))))
    events.append(Measure(named_observable(choice), ("p1",), "t2"))
    return Timeline((("ref1", 2), ("p1", 2), ("p2", 2), ("ref2", 2)), events)


# ---------------------------------------------------------------- erasure


@dataclass(frozen=True)
class GuardToken:
    """Marks which factor of an erasure state must stay untouched."""

    ancilla: int = 1

    def guard(self, names: Sequence[str]) -> Guard:
        return Guard((names[self.ancilla],))


@dataclass(frozen=True, eq=False)
class ErasedPast:
    state: ForwardState
    token: GuardToken

    def __iter__(self):
        return iter((self.state, self.token))

    def timeline(self, events=(), system: str = "sys", ancilla: str = "anc") -> Timeline:
        """Timeline starting from the erasure state with the ancilla guarded."""
        d = self.state.dims[0]
        names = (system, ancilla)
        head = [Preselect.of(self.state, names, "max_entangled"), self.token.guard(names)]
        return Timeline(((system, d), (ancilla, d)), head + list(events))


def erase_past(system_dim: int) -> ErasedPast:
    """Maximally entangle the system with an ancilla and hand back a guard token."""
    if system_dim < 2:
        raise BadDimension(f"system dimension must be >= 2, got {system_dim}")
    return ErasedPast(maximally_entangled(system_dim), GuardToken(1))


def erasure_timeline(post: BackwardState, obs: Observable) -> Timeline:
    """Erase the past, measure ``obs``, then post-select the system on ``post``."""
    return erase_past(obs.dim).timeline(
        [
            Measure(obs, ("sys",), "mid"),
            Measure(Observable.projector_onto(post.ket()), ("sys",), "post"),
            Postselect("post", 1),
        ]
    )


# ---------------------------------------------------------------- flip


def flip_backward_to_forward(chi: BackwardState) -> ForwardState:
    """Forward state of the EPR partner of a qubit post-selected on ``chi``.

    For the bra of ``|chi> = a|up> + b|down>`` the result is
    ``-b*|up> + a*|down>``.  In terms of the stored bra coefficients
    ``c = (a*, b*)`` that is ``(-c[1], c[0])``.
    """
    if chi.coefficients.size != 2:
        raise DimMismatch(f"flip is defined for qubits, got dims {chi.dims}")
    c = chi.coefficients
    return ForwardState([-c[1], c[0]])


def flip_forward_to_backward(psi: ForwardState) -> BackwardState:
    """Backward state left on an ancilla when the system and ancilla give the singlet outcome.

    The mirror image of :func:`flip_backward_to_forward`; it only
    materialises with probability 1/4 (see :func:`flip_forward_attempt`).
    """
    if psi.vector.size != 2:
        raise DimMismatch(f"flip is defined for qubits, got dims {psi.dims}")
    v = psi.vector
    return BackwardState([-v[1], v[0]])


def flip_via_singlet(chi: BackwardState) -> ForwardState:
    """Condition the ancilla of a singlet on the system being post-selected on ``chi``."""
    pair = singlet().vector.reshape(2, 2)
    return ForwardState(chi.coefficients @ pair, normalize=True)


def flip_timeline(chi: BackwardState) -> Timeline:
    """Singlet, test the ancilla for ``flip(chi)``, post-select the system on ``chi``."""
    target = flip_backward_to_forward(chi)
    return Timeline(
        (("sys", 2), ("anc", 2)),
        [
            Preselect.of(singlet(), ("sys", "anc"), "singlet"),
            Measure(Observable.projector_onto(target), ("anc",), "check"),
            Measure(Observable.projector_onto(chi.ket()), ("sys",), "post"),
            Postselect("post", 1),
        ],
    )


@dataclass(frozen=True, eq=False)
class ForwardFlipReport:
    """Bell-measurement attempt at turning a forward qubit state into a backward one.

    ``probabilities[k]`` is the chance of Bell outcome k with an erased
    ancilla, ``ancilla_states[k]`` the backward state it leaves on the
    ancilla and ``succeeded[k]`` whether that equals the flip of the input.
    """

    probabilities: np.ndarray
    ancilla_states: tuple[BackwardState, ...]
    succeeded: tuple[bool, ...]

    @property
    def success_probability(self) -> float:
        return float(sum(p for p, ok in zip(self.probabilities, self.succeeded) if ok))


def _bell_remnant(psi: np.ndarray, k: int, correction: np.ndarray) -> np.ndarray:
    bell = bell_basis()[k].vector.reshape(2, 2)
    # <B_k|_{sys,anc} (|psi>_sys (x) V|x>_anc) as a functional of x
    return (psi @ bell.conj()) @ correction


def flip_forward_attempt(psi: ForwardState, correction: np.ndarray | None = None) -> ForwardFlipReport:
    """Try to flip a forward state via a Bell measurement on system and ancilla.

    ``correction`` is a unitary applied to the ancilla *before* the Bell
    measurement, the only moment at which it can still affect the ancilla's
    backward state; it therefore cannot depend on the outcome.
    """
    v = correction if correction is not None else np.eye(2)
    target = flip_forward_to_backward(psi).coefficients
    probs, states, ok = [], [], []
    for k in range(4):
        c = _bell_remnant(psi.vector, k, v)
        w = float(np.linalg.norm(c) ** 2)
        probs.append(0.5 * w)  # ancilla maximally mixed
        state = BackwardState(c, normalize=True)
        states.append(state)
        ok.append(bool(abs(abs(np.vdot(target, state.coefficients)) - 1.0) <= 1e-12))
    return ForwardFlipReport(np.array(probs), tuple(states), tuple(ok))


def forward_flip_timeline() -> Timeline:
    """Bell measurement on an erased system and erased ancilla (oracle for the 1/4)."""
    mx = maximally_entangled(2)
    return Timeline(
        (("ref", 2), ("sys", 2), ("anc", 2), ("ref2", 2)),
        [
            Preselect((Factor(("ref", "sys"), mx, "max_entangled"), Factor(("anc", "ref2"), mx, "max_entangled"))),
            Guard(("ref", "ref2")),
            Measure(bell_observable(), ("sys", "anc"), "bell"),
        ],
    )


# ---------------------------------------------------------------- teleportation

_XZ = SIGMA_X @ SIGMA_Z

#: Bob's correction for each Bell outcome of Alice, in :func:`bell_basis` order.
TELEPORT_CORRECTIONS: dict[str, tuple[str, np.ndarray]] = {
    "phi_plus": ("identity", np.eye(2, dtype=complex)),
    "phi_minus": ("sigma_z", SIGMA_Z),
    "psi_plus": ("sigma_x", SIGMA_X),
    "psi_minus": ("xz", _XZ),
}


def teleportation_maps() -> list[np.ndarray]:
    """``M_k`` with ``(<B_k| (x) 1)(|psi> (x) |Phi+>) = M_k |psi> / 2`` on Bob's qubit."""
    phi_plus = bell_basis()[0].vector
    maps = []
    for b in bell_basis():
        m = np.zeros((2, 2), dtype=complex)
        for j in range(2):
            psi = np.zeros(2)
            psi[j] = 1.0
            full = np.kron(psi, phi_plus).reshape(4, 2)  # (sys, alice) x bob
            m[:, j] = 2.0 * (b.vector.conj() @ full)
        maps.append(m)
    return maps


def backward_teleport_timeline(A: Observable, a_index: int, B: Observable) -> Timeline:
    """Victoria measures B, Alice teleports to Bob, Victor measures A and keeps A=a.

    Victoria's qubit has an erased past (entangled with a guarded reference).
    """
    names = [v[0] for v in TELEPORT_CORRECTIONS.values()]
    ops = [LinearOp(v[1]) for v in TELEPORT_CORRECTIONS.values()]
    return Timeline(
        (("ref", 2), ("sys", 2), ("alice", 2), ("bob", 2)),
        [
            Preselect(
                (
                    Factor(("ref", "sys"), maximally_entangled(2), "max_entangled"),
                    Factor(("alice", "bob"), bell_basis()[0], "bell_phi_plus"),
                )
            ),
            Guard(("ref",)),
            Measure(B, ("sys",), "victoria"),
            Measure(bell_observable(), ("sys", "alice"), "alice"),
            Unitary(("bob",), tuple(ops), "alice", tuple(names)),
            Measure(A, ("bob",), "victor"),
            Postselect("victor", a_index),
        ],
    )


@dataclass(frozen=True, eq=False)
class TeleportReport:
    """Victoria's outcome statistics on the runs Victor kept.

    ``expected[b]`` is ``Tr(P_b P_a) / Tr(P_a)``, i.e. ``|<B=b|A=a>|^2`` for
    non-degenerate observables.  ``per_bell[k]`` conditions additionally on
    Alice's Bell outcome ``k``.
    """

    conditional: OutcomeDistribution
    per_bell: dict[int, OutcomeDistribution]
    expected: np.ndarray
    corrections: dict[str, str]
    postselection_probability: float
    run: RunResult
    sampled: RunResult | None = None

    def max_deviation(self) -> float:
        devs = [np.max(np.abs(self.conditional.probabilities - self.expected))]
        devs += [np.max(np.abs(d.probabilities - self.expected)) for d in self.per_bell.values()]
        return float(max(devs))

    def sampled_deviation_in_sigmas(self) -> float:
        """Largest |sampled - exact| in binomial standard errors (0/0 counts as 0)."""
        if self.sampled is None:
            raise ValueError("no sampled run attached")
        p_hat = self.sampled.conditional("victoria").probabilities
        se = self.sampled.standard_errors("victoria")
        diff = np.abs(p_hat - self.conditional.probabilities)
        z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 1e-12, np.inf, 0.0))
        return float(z.max())


def teleport_backward_experiment(
    A: Observable,
    a: float,
    B: Observable,
    *,
    shots: int | None = None,
    seed: int | None = None,
) -> TeleportReport:
    """Teleport a backward-evolving state from Victor back to Victoria.

    ``a`` is the eigenvalue of ``A`` that Victor post-selects.
    """
    if A.dim != 2 or B.dim != 2:
        raise DimMismatch("backward teleportation is simulated for single qubits")
    a_index = A.index_of(a)
    t = backward_teleport_timeline(A, a_index, B)
    run = enumerate_branches(t)
    per_bell = {}
    for k in range(4):
        if run.probability_of({"alice": k}) > DENOMINATOR_TOL:
            per_bell[k] = run.conditional("victoria", {"alice": k})
    pa = A.projectors[a_index].matrix
    expected = np.array([np.real(np.trace(p.matrix @ pa)) for p in B.projectors])
    if expected.sum() <= DENOMINATOR_TOL:
        raise InconsistentSelection("post-selected outcome has zero probability")
    expected = expected / np.real(np.trace(pa))
    sampled = sample(t, shots, seed if seed is not None else 0) if shots else None
    return TeleportReport(
        conditional=run.conditional("victoria"),
        per_bell=per_bell,
        expected=expected,
        corrections={k: v[0] for k, v in TELEPORT_CORRECTIONS.items()},
        postselection_probability=run.postselection_probability,
        run=run,
        sampled=sampled,
    )

"""Time-ordered scenarios over named subsystems.

A :class:`Timeline` is a list of systems plus an ordered list of events::

    Preselect -> (Unitary | Measure | Guard | Postselect)*

:func:`validate` reports structural problems without raising,
:func:`enumerate_branches` computes exact branch amplitudes and conditional
outcome distributions, and :func:`sample` draws Born-rule shots with
collapse, treating post-selection as rejection.

Sampling uses numpy's Philox counter-based generator.  Shots are split into
fixed chunks of :data:`CHUNK_SHOTS`; chunk ``c`` of a run seeded with ``s``
draws from ``Philox(SeedSequence([s, c]))``, so results do not depend on how
many workers process the chunks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    BranchCapExceeded,
    EmptyEnsemble,
    GuardViolation,
    InsufficientShots,
    UnknownLabel,
    ValidationError,
)
from .linalg import MAX_DIMENSION, Ket, LinearOp, embed, permute, tensor_all
from .measure import DENOMINATOR_TOL, Observable, OutcomeDistribution
from .states import ForwardState

DEFAULT_BRANCH_CAP = 10**6
CHUNK_SHOTS = 8192


# ---------------------------------------------------------------- events


@dataclass(frozen=True, eq=False)
class Factor:
    """Part of a product pre-selection: ``state`` on ``targets`` in that order."""

    targets: tuple[str, ...]
    state: ForwardState
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True, eq=False)
class Preselect:
    factors: tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    @classmethod
    def of(cls, state: ForwardState, targets: Sequence[str], name: str | None = None):
        return cls((Factor(tuple(targets), state, name),))

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(t for f in self.factors for t in f.targets)


@dataclass(frozen=True, eq=False)
class Unitary:
    """Unitary on ``targets``; with ``controlled_by`` one op per outcome of that label."""

    targets: tuple[str, ...]
    ops: tuple[LinearOp, ...]
    controlled_by: str | None = None
    names: tuple[str | None, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        ops = tuple(o if isinstance(o, LinearOp) else LinearOp(o) for o in self.ops)
        object.__setattr__(self, "ops", ops)
        names = tuple(self.names) or (None,) * len(ops)
        object.__setattr__(self, "names", names)

    @classmethod
    def single(cls, targets, op, name: str | None = None) -> Unitary:
        return cls(tuple(targets), (op,), None, (name,))


@dataclass(frozen=True, eq=False)
class Measure:
    observable: Observable
    targets: tuple[str, ...]
    label: str

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True)
class Postselect:
    label: str
    outcome: int


@dataclass(frozen=True)
class Guard:
    targets: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))


Event = Preselect | Unitary | Measure | Postselect | Guard


@dataclass(frozen=True, eq=False)
class Timeline:
    systems: tuple[tuple[str, int], ...]
    events: tuple[Event, ...]

    def __post_init__(self):
        object.__setattr__(self, "systems", tuple((str(n), int(d)) for n, d in self.systems))
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.systems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.systems)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def measurements(self) -> list[Measure]:
        return [e for e in self.events if isinstance(e, Measure)]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.measurements())

    def measurement(self, label: str) -> Measure:
        for m in self.measurements():
            if m.label == label:
                return m
        raise KeyError(label)

    def without_postselection(self) -> Timeline:
        return replace(self, events=[e for e in self.events if not isinstance(e, Postselect)])

    def with_postselection(self, outcomes: Mapping[str, int]) -> Timeline:
        """Drop existing post-selections and select ``outcomes`` at the end instead."""
        base = self.without_postselection()
        extra = [Postselect(label, int(k)) for label, k in outcomes.items()]
        return replace(base, events=list(base.events) + extra)

    def postselections(self) -> dict[str, int]:
        return {e.label: e.outcome for e in self.events if isinstance(e, Postselect)}

    def repeat_measurement(self, label: str, times: int = 3) -> Timeline:
        """Measure ``label``'s observable ``times`` times back to back.

        Copies are labelled ``label#2``, ``label#3``...
        """
        events = []
        for e in self.events:
            events.append(e)
            if isinstance(e, Measure) and e.label == label:
                events.extend(
                    Measure(e.observable, e.targets, f"{label}#{k}") for k in range(2, times + 1)
                )
        return replace(self, events=events)

    def insert_after_preselect(self, event: Event) -> Timeline:
        return replace(self, events=[self.events[0], event, *self.events[1:]])


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Issue:
    kind: str
    index: int | None
    message: str

    def __str__(self) -> str:
        where = f"events[{self.index}]" if self.index is not None else "timeline"
        return f"{where}: {self.kind}: {self.message}"


def _touches(event) -> tuple[str, ...]:
    if isinstance(event, (Unitary, Measure)):
        return event.targets
    return ()


def validate(t: Timeline) -> list[Issue]:
    """Structural checks; returns every problem found, never raises."""
    issues: list[Issue] = []
    add = lambda kind, index, msg: issues.append(Issue(kind, index, msg))  # noqa: E731

    names = t.names
    sizes = dict(t.systems)
    if not t.systems:
        add("BadDimension", None, "no systems declared")
    if len(set(names)) != len(names):
        add("DuplicateSystem", None, f"system names repeat: {list(names)}")
    for n, d in t.systems:
        if d < 2:
            add("BadDimension", None, f"system {n!r} has dimension {d} < 2")
    total = int(np.prod([max(d, 1) for d in t.dims])) if t.systems else 0
    if total > MAX_DIMENSION:
        add("BadDimension", None, f"total dimension {total} exceeds {MAX_DIMENSION}")

    if not t.events or not isinstance(t.events[0], Preselect):
        add("BadPreselect", 0 if t.events else None, "the first event must be the preselect")

    def check_targets(i, targets) -> bool:
        ok = True
        for name in targets:
            if name not in sizes:
                add("UnknownSystem", i, f"undeclared system {name!r}")
                ok = False
        if len(set(targets)) != len(targets):
            add("BadTargets", i, f"repeated target in {list(targets)}")
            ok = False
        if not targets:
            add("BadTargets", i, "no targets")
            ok = False
        return ok

    def target_dim(targets) -> int:
        return int(np.prod([sizes[n] for n in targets]))

    measured: dict[str, int] = {}
    for i, e in enumerate(t.events):
        if isinstance(e, Preselect):
            if i != 0:
                add("BadPreselect", i, "only one preselect is allowed and it must come first")
            if not check_targets(i, e.targets):
                continue
            if sorted(e.targets) != sorted(names):
                add("BadPreselect", i, f"preselect covers {list(e.targets)}, expected {list(names)}")
            for f in e.factors:
                want = tuple(sizes[n] for n in f.targets)
                if f.state.dims != want and len(f.state.vector) != int(np.prod(want)):
                    add("DimMismatch", i, f"state of length {len(f.state.vector)} on {list(f.targets)}")
        elif isinstance(e, Unitary):
            if not check_targets(i, e.targets):
                continue
            d = target_dim(e.targets)
            if e.controlled_by is not None:
                if e.controlled_by not in measured:
                    add("UnknownLabel", i, f"controlled_by {e.controlled_by!r} is not an earlier measurement")
                elif len(e.ops) != measured[e.controlled_by]:
                    add(
                        "DimMismatch",
                        i,
                        f"{len(e.ops)} ops for {measured[e.controlled_by]} outcomes of {e.controlled_by!r}",
                    )
            elif len(e.ops) != 1:
                add("DimMismatch", i, "an uncontrolled unitary takes exactly one op")
            for op in e.ops:
                if op.dim != d:
                    add("DimMismatch", i, f"op of dimension {op.dim} on targets of dimension {d}")
                elif not op.is_unitary():
                    add("NotUnitary", i, "op is not unitary within 1e-10")
        elif isinstance(e, Measure):
            if e.label in measured:
                add("DuplicateLabel", i, f"label {e.label!r} already used")
            if check_targets(i, e.targets) and e.observable.dim != target_dim(e.targets):
                add(
                    "DimMismatch",
                    i,
                    f"observable of dimension {e.observable.dim} on targets of dimension "
                    f"{target_dim(e.targets)}",
                )
            measured[e.label] = len(e.observable)
        elif isinstance(e, Postselect):
            if e.label not in measured:
                add("UnknownLabel", i, f"postselect on {e.label!r} which is not an earlier measurement")
            elif not 0 <= e.outcome < measured[e.label]:
                add("BadOutcome", i, f"outcome {e.outcome} out of range for {e.label!r}")
        elif isinstance(e, Guard):
            check_targets(i, e.targets)
        else:
            add("BadEvent", i, f"unknown event {type(e).__name__}")

    last_post = max((i for i, e in enumerate(t.events) if isinstance(e, Postselect)), default=-1)
    for g, e in enumerate(t.events):
        if not isinstance(e, Guard):
            continue
        for i in range(g + 1, last_post):
            hit = set(_touches(t.events[i])) & set(e.targets)
            if hit:
                add(
                    "GuardViolation",
                    i,
                    f"touches guarded {sorted(hit)} (guarded at events[{g}]) before the final postselect",
                )
    return issues


_ERRORS = {"GuardViolation": GuardViolation, "UnknownLabel": UnknownLabel}


def check(t: Timeline) -> None:
    """Raise if :func:`validate` finds anything; the class follows the first issue."""
    issues = validate(t)
    if issues:
        for issue in issues:
            if issue.kind in _ERRORS:
                raise _ERRORS[issue.kind](issues)
        raise ValidationError(issues)


# ---------------------------------------------------------------- compilation


@dataclass(frozen=True, eq=False)
class _Step:
    kind: str  # "unitary" | "measure" | "postselect"
    matrices: tuple[np.ndarray, ...] = ()
    column: int = -1  # measurement column written or read
    outcome: int = -1


def initial_state(t: Timeline) -> np.ndarray:
    pre = t.events[0]
    order = [t.index(n) for n in pre.targets]
    dims = tuple(t.dims[i] for i in order)
    joint = tensor_all([Ket(f.state.vector) for f in pre.factors])
    joint = Ket(joint.amplitudes, dims)
    perm = [order.index(i) for i in range(len(order))]
    return np.array(permute(joint, perm).amplitudes)


def _compile(t: Timeline) -> list[_Step]:
    dims = t.dims
    columns = {label: k for k, label in enumerate(t.labels)}
    steps = []
    for e in t.events[1:]:
        idx = [t.index(n) for n in e.targets] if hasattr(e, "targets") else []
        if isinstance(e, Unitary):
            mats = tuple(np.array(embed(op, dims, idx).matrix) for op in e.ops)
            col = columns[e.controlled_by] if e.controlled_by is not None else -1
            steps.append(_Step("unitary", mats, col))
        elif isinstance(e, Measure):
            mats = tuple(
                np.array(embed(LinearOp(p.matrix, (p.dim,)), dims, idx).matrix)
                for p in e.observable.projectors
            )
            steps.append(_Step("measure", mats, columns[e.label]))
        elif isinstance(e, Postselect):
            steps.append(_Step("postselect", column=columns[e.label], outcome=e.outcome))
    return steps


def branch_bound(t: Timeline) -> int:
    return int(np.prod([len(m.observable) for m in t.measurements()], dtype=object))


# ---------------------------------------------------------------- results


@dataclass(frozen=True, eq=False)
class RunResult:
    """Outcome statistics of a timeline run.

    ``outcomes`` has one row per surviving branch (exact) or accepted shot
    (sampled) and one column per measurement label; ``weights`` are the
    matching conditional probabilities and sum to one.
    """

    labels: tuple[str, ...]
    eigenvalues: dict[str, tuple[float, ...]]
    outcomes: np.ndarray
    weights: np.ndarray
    postselection_probability: float
    branch_count: int
    shots: int | None = None
    accepted: int | None = None
    seed: int | None = None
    postselected: dict[str, int] = field(default_factory=dict)

    @property
    def sampled(self) -> bool:
        return self.shots is not None

    def conditional(self, label: str, given: Mapping[str, int] | None = None) -> OutcomeDistribution:
        """Distribution of ``label`` given the run's post-selection and ``given``."""
        col = self.labels.index(label)
        mask = np.ones(len(self.weights), dtype=bool)
        for other, k in (given or {}).items():
            mask &= self.outcomes[:, self.labels.index(other)] == k
        # sampled runs count shots so that frequencies are exact ratios
        w = np.ones(int(mask.sum())) if self.sampled else self.weights[mask]
        total = w.sum()
        if total <= DENOMINATOR_TOL:
            raise EmptyEnsemble(f"conditioning on {dict(given or {})} leaves no weight")
        n = len(self.eigenvalues[label])
        probs = np.bincount(self.outcomes[mask, col], weights=w, minlength=n)[:n] / total
        return OutcomeDistribution(self.eigenvalues[label], probs)

    def probability_of(self, outcomes: Mapping[str, int]) -> float:
        """Conditional probability of a joint assignment of outcomes."""
        mask = np.ones(len(self.weights), dtype=bool)
        for label, k in outcomes.items():
            mask &= self.outcomes[:, self.labels.index(label)] == k
        if self.sampled:
            return float(mask.sum() / len(mask))
        return float(self.weights[mask].sum())

    @property
    def distributions(self) -> dict[str, OutcomeDistribution]:
        return {label: self.conditional(label) for label in self.labels}

    def standard_errors(self, label: str) -> np.ndarray:
        """Binomial standard error of each sampled conditional probability."""
        if not self.sampled:
            return np.zeros(len(self.eigenvalues[label]))
        p = self.conditional(label).probabilities
        return np.sqrt(np.clip(p * (1.0 - p), 0.0, None) / self.accepted)


def _result_shell(t: Timeline):
    return t.labels, {m.label: m.observable.eigenvalues for m in t.measurements()}


# ---------------------------------------------------------------- exact engine


def enumerate_branches(t: Timeline, branch_cap: int = DEFAULT_BRANCH_CAP) -> RunResult:
    """Exact amplitudes of every measurement branch, renormalized after post-selection."""
    check(t)
    bound = branch_bound(t)
    if bound > branch_cap:
        raise BranchCapExceeded(f"timeline can produce {bound} branches, cap is {branch_cap}")
    labels, eigenvalues = _result_shell(t)

    vectors = initial_state(t)[None, :]
    outcomes = np.zeros((1, len(labels)), dtype=np.int64)
    for step in _compile(t):
        if step.kind == "unitary":
            if step.column < 0:
                vectors = vectors @ step.matrices[0].T
            else:
                vectors = vectors.copy()
                for k, u in enumerate(step.matrices):
                    rows = outcomes[:, step.column] == k
                    vectors[rows] = vectors[rows] @ u.T
        elif step.kind == "measure":
            k = len(step.matrices)
            split = np.stack([vectors @ p.T for p in step.matrices], axis=1)
            vectors = split.reshape(-1, vectors.shape[1])
            outcomes = np.repeat(outcomes, k, axis=0)
            outcomes[:, step.column] = np.tile(np.arange(k), len(outcomes) // k)
        else:
            keep = outcomes[:, step.column] == step.outcome
            vectors, outcomes = vectors[keep], outcomes[keep]

    weights = np.sum(np.abs(vectors) ** 2, axis=1)
    survived = float(weights.sum())
    if survived <= DENOMINATOR_TOL:
        raise EmptyEnsemble(f"post-selection probability {survived:.3g}; no branch survives")
    return RunResult(
        labels=labels,
        eigenvalues=eigenvalues,
        outcomes=outcomes,
        weights=weights / survived,
        postselection_probability=min(survived, 1.0),
        branch_count=len(weights),
        postselected=t.postselections(),
    )


# ---------------------------------------------------------------- sampler


def _generator(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), chunk])))


def _run_chunk(psi0, steps, n_labels, n, rng):
    states = np.repeat(psi0[None, :], n, axis=0)
    outcomes = np.zeros((n, n_labels), dtype=np.int64)
    accepted = np.ones(n, dtype=bool)
    rows = np.arange(n)
    for step in steps:
        if step.kind == "unitary":
            if step.column < 0:
                states = states @ step.matrices[0].T
            else:
                for k, u in enumerate(step.matrices):
                    sel = outcomes[:, step.column] == k
                    states[sel] = states[sel] @ u.T
        elif step.kind == "measure":
            branches = np.stack([states @ p.T for p in step.matrices])  # (k, n, D)
            probs = np.sum(np.abs(branches) ** 2, axis=2).T  # (n, k)
            cum = np.cumsum(probs, axis=1)
            cum /= cum[:, -1:]
            u = rng.random(n)
            choice = np.minimum((u[:, None] >= cum).sum(axis=1), len(step.matrices) - 1)
            outcomes[:, step.column] = choice
            states = branches[choice, rows] / np.sqrt(probs[rows, choice])[:, None]
        else:
            accepted &= outcomes[:, step.column] == step.outcome
    return outcomes[accepted]


def sample(t: Timeline, shots: int, seed: int, workers: int = 1) -> RunResult:
    """Born-rule sampling with collapse; post-selection by rejection.

    The result is a deterministic function of ``(t, shots, seed)``.
    """
    check(t)
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    labels, eigenvalues = _result_shell(t)
    psi0 = initial_state(t)
    steps = _compile(t)

    sizes = [CHUNK_SHOTS] * (shots // CHUNK_SHOTS)
    if shots % CHUNK_SHOTS:
        sizes.append(shots % CHUNK_SHOTS)

    def run(c):
        return _run_chunk(psi0, steps, len(labels), sizes[c], _generator(seed, c))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(c) for c in range(len(sizes))]
    kept = np.concatenate(parts, axis=0) if parts else np.zeros((0, len(labels)), dtype=np.int64)

    if len(kept) == 0:
        try:
            exact = enumerate_branches(t).postselection_probability
        except EmptyEnsemble:
            raise EmptyEnsemble("no shot accepted and the exact ensemble is empty") from None
        raise InsufficientShots(
            f"no shot out of {shots} accepted (exact acceptance {exact:.3g})"
        )
    return RunResult(
        labels=labels,
        eigenvalues=eigenvalues,
        outcomes=kept,
        weights=np.full(len(kept), 1.0 / len(kept)),
        postselection_probability=len(kept) / shots,
        branch_count=len({tuple(r) for r in kept.tolist()}),
        shots=shots,
        accepted=len(kept),
        seed=int(seed),
        postselected=t.postselections(),
    )


def total_probability_gap(t: Timeline, label: str) -> float:
    """Largest deviation from the law of total probability for ``label``.

    Weighs the conditional distribution of ``label`` under every possible
    combination of the timeline's post-selected outcomes by that
    combination's probability and compares with the unconditioned run.
    """
    selected = list(t.postselections())
    free = enumerate_branches(t.without_postselection())
    target = free.conditional(label).probabilities
    if not selected:
        return 0.0
    cols = [free.labels.index(s) for s in selected]
    combos = {tuple(r) for r in free.outcomes[:, cols].tolist()}
    total = np.zeros_like(target)
    for combo in combos:
        assignment = dict(zip(selected, combo))
        weight = free.probability_of(assignment)
        if weight <= DENOMINATOR_TOL:
            continue
        cond = enumerate_branches(t.with_postselection(assignment)).conditional(label)
        total += weight * cond.probabilities
    return float(np.max(np.abs(total - target)))


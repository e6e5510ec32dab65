import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cloner_mixtures, haar_unitary, spectral_observable, unit_vector
from twostate.errors import BadDimension, DimMismatch, GuardViolation, NotCPTP
from twostate.linalg import LinearOp
from twostate.measure import Observable, abl_generalized, born, named_observable
from twostate.protocols import (
    TELEPORT_CORRECTIONS,
    Channel,
    audit_timeline,
    cloning_signaling_audit,
    erase_past,
    erasure_timeline,
    flip_backward_to_forward,
    flip_forward_attempt,
    flip_timeline,
    flip_via_singlet,
    forward_flip_timeline,
    ideal_backward_cloner,
    random_cptp_channel,
    teleport_backward_experiment,
    teleportation_maps,
)
from twostate.states import DOWN, PLUS, UP, BackwardState, ForwardState
from twostate.timeline import Measure, enumerate_branches, validate

SX, SY, SZ = (named_observable(n) for n in ("sigma_x", "sigma_y", "sigma_z"))
seeds = st.integers(0, 2**32 - 1)


def random_bra(rng):
    return BackwardState(unit_vector(2, rng))


# ---------------------------------------------------------------- erasure


def test_erase_post_plus_sigma_x():
    state, _ = erase_past(2)
    assert abl_generalized(state, PLUS.dual(), SX).prob(1) == pytest.approx(1, abs=1e-15)
    assert enumerate_branches(erasure_timeline(PLUS.dual(), SX)).conditional("mid").prob(1) == pytest.approx(
        1, abs=1e-12
    )


def test_erase_without_postselection_is_uniform():
    t = erasure_timeline(PLUS.dual(), SZ).without_postselection()
    assert list(enumerate_branches(t).conditional("mid").probabilities) == pytest.approx([0.5, 0.5], abs=1e-15)


def test_erase_guard_violation():
    erased = erase_past(2)
    t = erased.timeline([Measure(SZ, ("anc",), "peek"), Measure(Observable.projector_onto(PLUS), ("sys",), "post")])
    t = t.with_postselection({"post": 1})
    assert [i.kind for i in validate(t)] == ["GuardViolation"]
    with pytest.raises(GuardViolation):
        enumerate_branches(t)


def test_erase_bad_dimension():
    with pytest.raises(BadDimension):
        erase_past(1)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_erasure_depends_only_on_backward_state(d, rng):
    for _ in range(20):
        obs, _ = spectral_observable(d, rng, degenerate=bool(rng.integers(2)))
        post = ForwardState(unit_vector(d, rng)).dual()
        run = enumerate_branches(erasure_timeline(post, obs))
        assert np.max(np.abs(run.conditional("mid").probabilities - born(post.ket(), obs).probabilities)) <= 1e-12


# ---------------------------------------------------------------- flip


def test_flip_examples_exact():
    assert np.array_equal(flip_backward_to_forward(UP.dual()).vector, [0, 1])
    assert np.array_equal(flip_backward_to_forward(DOWN.dual()).vector, [-1, 0])


def test_flip_of_complex_bra():
    # bra of |chi> = a|up> + b|down> -> -b*|up> + a*|down>
    a, b = 0.6, 0.8j
    chi = ForwardState([a, b]).dual()
    assert np.allclose(flip_backward_to_forward(chi).vector, [-np.conj(b), np.conj(a)], atol=1e-16)


def test_flip_rejects_qutrit():
    with pytest.raises(DimMismatch):
        flip_backward_to_forward(BackwardState([1, 0, 0]))


def singlet_partner(chi):
    """Ancilla of (|01> - |10>)/sqrt2 after the system is post-selected on chi, from scratch."""
    c = chi.coefficients
    v = np.array([c[1], -c[0]]) / np.sqrt(2)  # (<chi| (x) 1) applied to the singlet
    return v / np.linalg.norm(v)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_flip_matches_singlet_protocol(seed):
    chi = random_bra(np.random.default_rng(seed))
    flipped = flip_backward_to_forward(chi).vector
    assert abs(abs(np.vdot(flipped, singlet_partner(chi))) ** 2 - 1) <= 1e-12
    assert abs(flip_backward_to_forward(chi).fidelity(flip_via_singlet(chi)) - 1) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_flip_timeline_check_is_certain(seed):
    chi = random_bra(np.random.default_rng(seed))
    assert enumerate_branches(flip_timeline(chi)).conditional("check")[1] == pytest.approx(1, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_flip_squared_is_minus_identity(seed):
    chi = random_bra(np.random.default_rng(seed))
    twice = flip_backward_to_forward(flip_backward_to_forward(chi).dual()).dual()
    assert np.max(np.abs(twice.coefficients + chi.coefficients)) <= 1e-12
    assert abs(abs(twice.apply(chi.ket())) - 1) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_flip_orthogonal_to_input(seed):
    chi = random_bra(np.random.default_rng(seed))
    assert abs(chi.apply(flip_backward_to_forward(chi))) <= 1e-12


# ---------------------------------------------------------------- forward flip (negative result)


def test_forward_flip_bell_outcomes_uniform():
    run = enumerate_branches(forward_flip_timeline())
    assert list(run.conditional("bell").probabilities) == pytest.approx([0.25] * 4, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_forward_flip_succeeds_only_on_singlet(seed):
    psi = ForwardState(unit_vector(2, np.random.default_rng(seed)))
    report = flip_forward_attempt(psi)
    assert report.succeeded == (False, False, False, True)
    assert report.success_probability == pytest.approx(0.25, abs=1e-12)


def test_forward_flip_each_outcome_needs_its_own_prior_correction(rng):
    # the correction acts before the Bell measurement, so it cannot depend on the outcome:
    # whichever fixed correction is used, exactly one outcome works, and which one depends on it
    winners = set()
    psis = [ForwardState(unit_vector(2, rng)) for _ in range(2)]
    for _, c in TELEPORT_CORRECTIONS.values():
        wins = [flip_forward_attempt(psi, c).succeeded for psi in psis]
        assert wins[0] == wins[1]
        assert sum(wins[0]) == 1
        winners.add(wins[0].index(True))
    assert winners == {0, 1, 2, 3}
    for _ in range(50):
        report = flip_forward_attempt(psis[0], haar_unitary(2, rng))
        assert report.success_probability <= 0.25 + 1e-12


# ---------------------------------------------------------------- teleportation


def expected_retrodiction(A, a_index, B):
    """Tr(P_b P_a) / Tr(P_a): |<B=b|A=a>|^2 for non-degenerate A."""
    pa = A.projectors[a_index].matrix
    w = np.array([np.trace(p.matrix @ pa).real for p in B.projectors])
    return w / np.trace(pa).real


def test_teleport_sigma_z_twice():
    r = teleport_backward_experiment(SZ, 1, SZ)
    assert r.conditional.prob(1) == pytest.approx(1, abs=1e-12)
    for k in range(4):
        assert r.per_bell[k].prob(1) == pytest.approx(1, abs=1e-12)


def test_teleport_sigma_z_then_sigma_x():
    r = teleport_backward_experiment(SZ, 1, SX)
    assert list(r.conditional.probabilities) == pytest.approx([0.5, 0.5], abs=1e-12)


def test_teleport_random_observables(rng):
    for _ in range(20):
        (A, pa), (B, pb) = spectral_observable(2, rng), spectral_observable(2, rng)
        k = int(rng.integers(2))
        r = teleport_backward_experiment(A, A.eigenvalues[k], B)
        want = np.array([abs(np.vdot(np.linalg.eigh(p)[1][:, -1], np.linalg.eigh(pa[k])[1][:, -1])) ** 2 for p in pb])
        assert len(r.per_bell) == 4
        for dist in [r.conditional, *r.per_bell.values()]:
            assert np.max(np.abs(dist.probabilities - want)) <= 1e-10


def test_teleport_corrections_undo_every_bell_outcome():
    maps = teleportation_maps()
    for (name, c), m in zip(TELEPORT_CORRECTIONS.values(), maps):
        product = c @ m
        fidelity = abs(np.trace(product)) ** 2 / 4  # process fidelity with the identity
        assert fidelity == pytest.approx(1, abs=1e-12), name
        assert np.allclose(product, product[0, 0] * np.eye(2), atol=1e-12)


def test_teleport_rejects_qutrits(rng):
    obs, _ = spectral_observable(3, rng)
    with pytest.raises(DimMismatch):
        teleport_backward_experiment(obs, obs.eigenvalues[0], obs)


def test_teleport_sampled():
    r = teleport_backward_experiment(SZ, 1, SX, shots=10**5, seed=3)
    assert r.sampled_deviation_in_sigmas() <= 5


# ---------------------------------------------------------------- channels and the audit


def test_channel_completeness_enforced():
    with pytest.raises(NotCPTP):
        Channel((LinearOp(np.eye(4) * 0.5, (2, 2)),))
    assert Channel((LinearOp(np.eye(4) * 0.5, (2, 2)),), physical=False).completeness_error() > 0


def test_ideal_cloner_is_non_physical():
    cloner = ideal_backward_cloner()
    assert cloner.physical is False
    for choice in ("sigma_z", "sigma_x"):
        assert cloner.completeness_error(choice) > 1e-3


def test_cloner_oracle_distance_is_one_half():
    a, b = cloner_mixtures()
    assert 0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum() == pytest.approx(0.5, abs=1e-15)


def test_ideal_cloner_audit():
    report = cloning_signaling_audit(ideal_backward_cloner())
    assert report.physical is False
    assert abs(report.trace_distance - 0.5) <= 1e-12
    assert np.allclose(report.statistics[("sigma_z", "sigma_z")], [[0.5, 0], [0, 0.5]])
    assert np.allclose(report.statistics[("sigma_z", "sigma_x")], 0.25)
    assert np.allclose(report.statistics[("sigma_x", "sigma_x")], [[0.5, 0], [0, 0.5]])
    a, b = cloner_mixtures()
    assert abs(report.trace_distance - 0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum()) <= 1e-12


def test_identity_channel_audit():
    report = cloning_signaling_audit(Channel.identity())
    assert report.trace_distance <= 1e-15
    assert report.physical


def test_random_cptp_channels_do_not_signal(rng):
    for _ in range(100):
        assert cloning_signaling_audit(random_cptp_channel(rng)).trace_distance <= 1e-10


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_audit_agrees_with_engine_for_unitaries(seed):
    rng = np.random.default_rng(seed)
    u = haar_unitary(4, rng)
    report = cloning_signaling_audit(Channel((LinearOp(u, (2, 2)),)))
    for half in ("sigma_z", "sigma_x"):
        for choice in ("sigma_z", "sigma_x"):
            run = enumerate_branches(audit_timeline(half, choice, u))
            # engine indexes ascending eigenvalue (-1 first); the report puts +1 first
            joint = np.array(
                [[run.probability_of({"t1_first": 1 - i, "t1_second": 1 - j}) for j in range(2)] for i in range(2)]
            )
            assert np.max(np.abs(joint - report.statistics[(half, choice)])) <= 1e-12


def test_audit_rejects_wrong_dimension():
    with pytest.raises(DimMismatch):
        cloning_signaling_audit(Channel.identity((2,)))

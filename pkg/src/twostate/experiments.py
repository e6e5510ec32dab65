"""Built-in named experiments.

Each experiment knows its command-line options, how to run itself with the
exact engine, and which timelines it uses (for engine self-checks).
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnknownExperiment
from .measure import Observable, abl, abl_generalized, named_observable
from .protocols import (
    LATER_CHOICES,
    Channel,
    audit_timeline,
    cloning_signaling_audit,
    erase_past,
    erasure_timeline,
    flip_backward_to_forward,
    flip_timeline,
    flip_via_singlet,
    ideal_backward_cloner,
    random_cptp_channel,
    teleport_backward_experiment,
    backward_teleport_timeline,
)
from .scenario import named_state
from .states import BackwardState, ForwardState
from .timeline import Measure, Postselect, Preselect, RunResult, Timeline, enumerate_branches

# ---------------------------------------------------------------- helpers


def parse_observable(text: str) -> Observable:
    """``sigma_x|sigma_y|sigma_z`` or ``axis:x,y,z`` for spin along a Bloch axis."""
    if text.startswith("axis:"):
        n = np.array([float(v) for v in text[5:].split(",")])
        if n.shape != (3,) or np.linalg.norm(n) == 0:
            raise argparse.ArgumentTypeError(f"bad axis {text!r}")
        n = n / np.linalg.norm(n)
        from .measure import SIGMA_X, SIGMA_Y, SIGMA_Z

        return Observable.from_matrix(n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z)
    try:
        return named_observable(text)
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown observable {text!r}") from None


def bloch_ket(theta: float, phi: float) -> ForwardState:
    return ForwardState([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def _probs(dist) -> list[float]:
    return [float(p) for p in dist.probabilities]


@dataclass
class Outcome:
    headline: dict
    run: RunResult | None = None


@dataclass
class Experiment:
    name: str
    summary: str
    reference: str
    add_arguments: Callable[[argparse.ArgumentParser], None]
    run: Callable[[argparse.Namespace], Outcome]
    timelines: Callable[[argparse.Namespace], list[tuple[str, Timeline]]]
    headline_key: str = ""

    def defaults(self) -> argparse.Namespace:
        p = argparse.ArgumentParser(add_help=False)
        self.add_arguments(p)
        return p.parse_args([])


# ---------------------------------------------------------------- three boxes

_THREE_BOX_PRE = np.ones(3) / np.sqrt(3)
_THREE_BOX_POST = np.array([1.0, 1.0, -1.0]) / np.sqrt(3)  # ket of the post-selected bra


def three_box_timeline(box: int) -> Timeline:
    """Ball in three boxes: is it in ``box`` (1-based)?"""
    basis = np.eye(3)
    found = Observable.projector_onto(ForwardState(basis[box - 1]))
    return Timeline(
        (("ball", 3),),
        [
            Preselect.of(ForwardState(_THREE_BOX_PRE), ("ball",)),
            Measure(found, ("ball",), f"box{box}"),
            Measure(Observable.projector_onto(ForwardState(_THREE_BOX_POST)), ("ball",), "post"),
            Postselect("post", 1),
        ],
    )


def _three_box_args(p):
    p.add_argument("--box", type=int, choices=(1, 2, 3), default=1, help="box to open (default 1)")


def _three_box_run(args) -> Outcome:
    run = enumerate_branches(three_box_timeline(args.box))
    obs = Observable.projector_onto(ForwardState(np.eye(3)[args.box - 1]))
    closed = abl(ForwardState(_THREE_BOX_PRE), ForwardState(_THREE_BOX_POST).dual(), obs)
    return Outcome(
        {
            "box": args.box,
            "found_probability": run.conditional(f"box{args.box}")[1],
            "abl_found_probability": closed[1],
        },
        run,
    )


# ---------------------------------------------------------------- erase


def _erase_args(p):
    p.add_argument("--dim", type=int, default=2, help="system dimension (default 2)")
    p.add_argument("--post", default="plus", help="post-selected ket: up|down|plus|minus or 'basis:k'")
    p.add_argument("--observable", default="sigma_x", help="intermediate observable (qubits) or 'basis' (computational)")


def _erase_parts(args):
    d = args.dim
    if args.post.startswith("basis:"):
        post_ket = ForwardState(np.eye(d)[int(args.post[6:])])
    else:
        post_ket = named_state(args.post, (d,))
    if args.observable == "basis":
        obs = Observable.from_matrix(np.diag(np.arange(d, dtype=float)))
    else:
        obs = parse_observable(args.observable)
    return post_ket.dual(), obs


def _erase_run(args) -> Outcome:
    post, obs = _erase_parts(args)
    run = enumerate_branches(erasure_timeline(post, obs))
    state, _ = erase_past(args.dim)
    closed = abl_generalized(state, post, obs)
    direct = [float(np.real(post.ket().vector.conj() @ p.matrix @ post.ket().vector)) for p in obs.projectors]
    return Outcome(
        {
            "eigenvalues": list(obs.eigenvalues),
            "probabilities": _probs(run.conditional("mid")),
            "abl_generalized": _probs(closed),
            "backward_state_only": direct,
        },
        run,
    )


def _erase_timelines(args):
    post, obs = _erase_parts(args)
    return [("erase", erasure_timeline(post, obs))]


# ---------------------------------------------------------------- teleport


def _teleport_args(p):
    p.add_argument("--A", dest="A", default="sigma_z", type=parse_observable, help="Victor's observable")
    p.add_argument("--a", dest="a", default=1.0, type=float, help="eigenvalue Victor keeps (default +1)")
    p.add_argument("--B", dest="B", default="sigma_z", type=parse_observable, help="Victoria's observable")
    p.add_argument("--shots", type=int, default=0, help="also sample this many shots")
    p.add_argument("--seed", type=int, default=None, help="sampler seed")


def _teleport_run(args) -> Outcome:
    report = teleport_backward_experiment(
        args.A, args.a, args.B, shots=args.shots or None, seed=args.seed if args.seed is not None else 0
    )
    headline = {
        "eigenvalues": list(args.B.eigenvalues),
        "conditional": _probs(report.conditional),
        "expected": [float(x) for x in report.expected],
        "per_bell": {str(k): _probs(d) for k, d in report.per_bell.items()},
        "corrections": report.corrections,
        "max_deviation": report.max_deviation(),
    }
    if report.sampled is not None:
        headline["sampled"] = _probs(report.sampled.conditional("victoria"))
        headline["sampled_deviation_sigmas"] = report.sampled_deviation_in_sigmas()
    return Outcome(headline, report.run)


def _teleport_timelines(args):
    return [("teleport", backward_teleport_timeline(args.A, args.A.index_of(args.a), args.B))]


# ---------------------------------------------------------------- flip


def _flip_args(p):
    p.add_argument("--theta", type=float, default=np.pi / 3, help="polar angle of the post-selected ket")
    p.add_argument("--phi", type=float, default=np.pi / 4, help="azimuth of the post-selected ket")


def _flip_chi(args) -> BackwardState:
    return bloch_ket(args.theta, args.phi).dual()


def _flip_run(args) -> Outcome:
    chi = _flip_chi(args)
    flipped = flip_backward_to_forward(chi)
    run = enumerate_branches(flip_timeline(chi))
    return Outcome(
        {
            "backward_coefficients": [[z.real, z.imag] for z in map(complex, chi.coefficients)],
            "flipped": [[z.real, z.imag] for z in map(complex, flipped.vector)],
            "singlet_fidelity": flipped.fidelity(flip_via_singlet(chi)),
            "check_probability": run.conditional("check")[1],
        },
        run,
    )


def _flip_timelines(args):
    return [("flip", flip_timeline(_flip_chi(args)))]


# ---------------------------------------------------------------- cloning audit

_CHANNELS = ("ideal-cloner", "identity", "random-cptp")


def _audit_args(p):
    p.add_argument("--channel", choices=_CHANNELS, default="ideal-cloner")
    p.add_argument("--trials", type=int, default=100, help="random channels to audit (random-cptp)")
    p.add_argument("--seed", type=int, default=None, help="seed for random channels")


def _audit_run(args) -> Outcome:
    if args.channel == "random-cptp":
        rng = np.random.default_rng(args.seed if args.seed is not None else 0)
        distances = [cloning_signaling_audit(random_cptp_channel(rng)).trace_distance for _ in range(args.trials)]
        return Outcome(
            {"channel": args.channel, "trials": args.trials, "trace_distance": max(distances), "physical": True}
        )
    channel = ideal_backward_cloner() if args.channel == "ideal-cloner" else Channel.identity()
    report = cloning_signaling_audit(channel)
    return Outcome(
        {
            "channel": args.channel,
            "physical": report.physical,
            "trace_distance": report.trace_distance,
            "half_distances": report.half_distances,
            "statistics": {
                f"{h}|later={c}": report.statistics[(h, c)].reshape(-1).tolist()
                for h in LATER_CHOICES
                for c in LATER_CHOICES
            },
        }
    )


def _audit_timelines(args):
    return [(f"audit-{h}-{c}", audit_timeline(h, c)) for h in LATER_CHOICES for c in LATER_CHOICES]


# ---------------------------------------------------------------- registry

EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment(
            "erase",
            "intermediate statistics with the past erased by a guarded, maximally entangled ancilla",
            "erasing the past; generalized ABL rule",
            _erase_args,
            _erase_run,
            _erase_timelines,
            "probabilities",
        ),
        Experiment(
            "three-box",
            "ball found with certainty in box 1 and also in box 2 under pre- and post-selection",
            "three-box paradox; ABL rule",
            _three_box_args,
            _three_box_run,
            lambda a: [("three-box", three_box_timeline(a.box))],
            "found_probability",
        ),
        Experiment(
            "teleport-backward",
            "backward-evolving state teleported from Victor's post-selection to Victoria's earlier measurement",
            "teleportation of backward-evolving states",
            _teleport_args,
            _teleport_run,
            _teleport_timelines,
            "conditional",
        ),
        Experiment(
            "flip",
            "backward qubit state turned into a flipped forward state of its EPR partner",
            "time-direction flip via an EPR pair",
            _flip_args,
            _flip_run,
            _flip_timelines,
            "singlet_fidelity",
        ),
        Experiment(
            "cloning-audit",
            "earlier pair statistics under a later sigma_z vs sigma_x choice, for a candidate cloner",
            "no cloning of backward-evolving states from causality",
            _audit_args,
            _audit_run,
            _audit_timelines,
            "trace_distance",
        ),
    ]
}


def get_experiment(name: str) -> Experiment:
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise UnknownExperiment(
            f"unknown experiment {name!r}; available: {', '.join(EXPERIMENTS)}"
        ) from None


def run_experiment(name: str, **options) -> Outcome:
    """Run a built-in experiment with keyword overrides of its defaults."""
    exp = get_experiment(name)
    args = exp.defaults()
    for k, v in options.items():
        setattr(args, k, v)
    return exp.run(args)


def experiment_timelines(name: str, **options) -> list[tuple[str, Timeline]]:
    exp = get_experiment(name)
    args = exp.defaults()
    for k, v in options.items():
        setattr(args, k, v)
    return exp.timelines(args)

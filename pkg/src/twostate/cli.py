"""Command-line front end: ``twostate run | experiment | list``.

Exit codes: 0 success, 2 invalid input, 3 empty ensemble, 4 internal error.
Results go to stdout, diagnostics to stderr.  ``TWOSTATE_SEED`` sets the
default sampler seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import (
    EmptyEnsemble,
    InconsistentSelection,
    InsufficientShots,
    ScenarioError,
    UnknownExperiment,
    ValidationError,
)
from .experiments import EXPERIMENTS, get_experiment
from .scenario import load_scenario, result_to_csv, result_to_doc, result_to_table
from .timeline import enumerate_branches, sample

EXIT_OK, EXIT_INVALID, EXIT_EMPTY, EXIT_INTERNAL = 0, 2, 3, 4
SEED_ENV = "TWOSTATE_SEED"


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _emit(doc: dict, fmt: str, out) -> None:
    if fmt == "csv":
        out.write(result_to_csv(doc))
    elif fmt == "table":
        out.write(result_to_table(doc) + "\n")
        if "headline" in doc:
            out.write(json.dumps(doc["headline"], indent=2) + "\n")
    else:
        out.write(json.dumps(doc, indent=2) + "\n")


def cmd_run(args, out=None) -> int:
    out = out or sys.stdout
    timeline = load_scenario(args.scenario)
    if args.shots:
        run = sample(timeline, args.shots, args.seed, workers=args.workers)
    else:
        run = enumerate_branches(timeline)
    _emit(result_to_doc(run, scenario=args.scenario), args.format, out)
    return EXIT_OK


def cmd_experiment(args, out=None) -> int:
    out = out or sys.stdout
    exp = get_experiment(args.name)
    parser = argparse.ArgumentParser(prog=f"twostate experiment {exp.name}", description=exp.summary)
    exp.add_arguments(parser)
    parser.add_argument("--format", choices=("json", "csv", "table"), default=args.format)
    options = parser.parse_args(args.options)
    args.format = options.format
    if getattr(options, "seed", 0) is None:
        options.seed = _default_seed()
    outcome = exp.run(options)
    meta = {"experiment": exp.name}
    if outcome.run is not None:
        doc = result_to_doc(outcome.run, outcome.headline, **meta)
    else:
        doc = {"metadata": {"version": __version__, "engine": "exact", **meta}, "measurements": {},
               "headline": outcome.headline}
    if args.format == "table" and outcome.run is None:
        out.write(f"{exp.headline_key}: {outcome.headline[exp.headline_key]!r}\n")
        out.write(json.dumps(outcome.headline, indent=2) + "\n")
    elif args.format == "csv" and outcome.run is None:
        out.write(f"quantity,value\n{exp.headline_key},{outcome.headline[exp.headline_key]!r}\n")
    else:
        _emit(doc, args.format, out)
    return EXIT_OK


def cmd_list(args, out=None) -> int:
    out = out or sys.stdout
    for exp in EXPERIMENTS.values():
        out.write(f"{exp.name:<18} {exp.summary}  [{exp.reference}]\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twostate", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a scenario JSON file")
    run.add_argument("scenario")
    mode = run.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exact branch enumeration (default)")
    mode.add_argument("--shots", type=int, default=0, help="sample this many shots instead")
    run.add_argument("--seed", type=int, default=None, help=f"sampler seed (default ${SEED_ENV} or 0)")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--format", choices=("json", "csv", "table"), default="json")
    run.set_defaults(func=cmd_run)

    exp = sub.add_parser("experiment", help="run a built-in experiment (see 'list')")
    exp.add_argument("name")
    exp.add_argument("--format", choices=("json", "csv", "table"), default="json")
    exp.add_argument("options", nargs=argparse.REMAINDER, help="experiment-specific options")
    exp.set_defaults(func=cmd_experiment)

    ls = sub.add_parser("list", help="list built-in experiments")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and args.command == "run":
        args.seed = _default_seed()
    try:
        return args.func(args)
    except ScenarioError as exc:
        for loc, msg in exc.problems:
            print(f"error: {loc}: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as exc:
        for issue in exc.issues:
            print(f"error: {issue}", file=sys.stderr)
        return EXIT_INVALID
    except UnknownExperiment as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EmptyEnsemble, InconsistentSelection, InsufficientShots) as exc:
        print(f"error: empty ensemble: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""JSON scenario documents and result documents.

A scenario document (schema ``schema/scenario-v1.json``) looks like::

    {"version": 1,
     "systems": [{"name": "sys", "dim": 2}, {"name": "anc", "dim": 2}],
     "events": [
       {"type": "preselect", "factors": [{"targets": ["sys", "anc"], "state": "max_entangled"}]},
       {"type": "guard", "targets": ["anc"]},
       {"type": "measure", "targets": ["sys"], "observable": "sigma_x", "label": "mid"},
       {"type": "measure", "targets": ["sys"], "observable": {"projector": "plus"}, "label": "post"},
       {"type": "postselect", "label": "post", "outcome": 1}]}

Complex numbers are ``[re, im]`` pairs (a bare number means a real value),
states are amplitude lists and operators row-major lists of rows.  Named
constants are written back by name; everything else is written as
``[re, im]`` pairs using Python's shortest round-trip float repr.
"""

from __future__ import annotations

import csv
import io
import json
from functools import lru_cache
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from .errors import DimMismatch, ScenarioError
from .linalg import LinearOp
from .measure import SIGMA_X, SIGMA_Y, SIGMA_Z, Observable, named_observable
from .states import DOWN, MINUS, NORM_TOL, PLUS, UP, ForwardState, bell_basis, maximally_entangled, singlet
from .timeline import Factor, Guard, Measure, Postselect, Preselect, RunResult, Timeline, Unitary

SCHEMA_VERSION = 1
EVENT_TYPES = ("preselect", "unitary", "measure", "postselect", "guard")

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_NAMED_OPS = {
    "sigma_x": SIGMA_X,
    "sigma_y": SIGMA_Y,
    "sigma_z": SIGMA_Z,
    "hadamard": _H,
    "xz": SIGMA_X @ SIGMA_Z,
}
_BELL_NAMES = ("bell_phi_plus", "bell_phi_minus", "bell_psi_plus", "bell_psi_minus")


@lru_cache(maxsize=None)
def schema() -> dict:
    text = resources.files("twostate").joinpath("schema/scenario-v1.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------- decoding


def _complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    return complex(value[0], value[1])


def _vector(values) -> np.ndarray:
    return np.array([_complex(v) for v in values], dtype=complex)


def _matrix(rows) -> np.ndarray:
    if len({len(r) for r in rows}) != 1:
        raise ValueError("matrix rows have different lengths")
    return np.array([[_complex(v) for v in r] for r in rows], dtype=complex)


def named_state(name: str, dims: tuple[int, ...]) -> ForwardState:
    if name == "max_entangled":
        if len(dims) != 2 or dims[0] != dims[1]:
            raise ValueError(f"max_entangled needs two targets of equal dimension, got {dims}")
        return maximally_entangled(dims[0])
    fixed = {"up": UP, "down": DOWN, "plus": PLUS, "minus": MINUS, "singlet": singlet()}
    fixed.update(zip(_BELL_NAMES, bell_basis()))
    state = fixed[name]
    if len(state.vector) != int(np.prod(dims)):
        raise ValueError(f"{name!r} has {len(state.vector)} amplitudes, targets need {int(np.prod(dims))}")
    return state


def _state(entry, dims: tuple[int, ...]) -> tuple[ForwardState, str | None]:
    if isinstance(entry, str):
        return named_state(entry, dims), entry
    v = _vector(entry)
    if len(v) != int(np.prod(dims)):
        raise ValueError(f"state has {len(v)} amplitudes, targets need {int(np.prod(dims))}")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("state is the zero vector")
    if abs(norm - 1.0) > NORM_TOL:
        v = v / norm
    return ForwardState(v, dims), None


def _operator(entry, dims: tuple[int, ...]) -> tuple[LinearOp, str | None]:
    d = int(np.prod(dims))
    if isinstance(entry, str):
        m = np.eye(d, dtype=complex) if entry == "identity" else _NAMED_OPS[entry]
        name = entry
    else:
        m, name = _matrix(entry), None
    if m.shape != (d, d):
        raise ValueError(f"operator of shape {m.shape} on targets of dimension {d}")
    return LinearOp(m), name


def _observable(entry, dims: tuple[int, ...]) -> Observable:
    d = int(np.prod(dims))
    if isinstance(entry, str):
        obs = named_observable(entry)
    elif "matrix" in entry:
        obs = Observable.from_matrix(_matrix(entry["matrix"]))
    else:
        state, name = _state(entry["projector"], dims)
        obs = Observable.projector_onto(state)
        if name is not None:
            obs = Observable(obs.eigenvalues, obs.projectors, None, ("projector", name))
    if obs.dim != d:
        raise ValueError(f"observable of dimension {obs.dim} on targets of dimension {d}")
    return obs


def _event_type_problems(doc) -> list[tuple[str, str]]:
    problems = []
    events = doc.get("events") if isinstance(doc, dict) else None
    if not isinstance(events, list):
        return problems
    for i, e in enumerate(events):
        if not isinstance(e, dict):
            problems.append((f"events/{i}", "event must be an object"))
        elif "type" not in e:
            problems.append((f"events/{i}", "event has no 'type'"))
        elif e["type"] not in EVENT_TYPES:
            problems.append(
                (f"events/{i}/type", f"unknown event type {e['type']!r}; expected one of {list(EVENT_TYPES)}")
            )
    return problems


def _path(error) -> str:
    return "/".join(str(p) for p in error.absolute_path) or "(document)"


def parse_scenario(doc: Any) -> Timeline:
    """Turn a scenario document into a :class:`Timeline`.

    Raises :class:`ScenarioError` listing every schema or decoding problem
    with its location; timeline-level checks are left to ``validate``.
    """
    problems = _event_type_problems(doc)
    if problems:
        raise ScenarioError(problems)
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ScenarioError([(_path(e), e.message) for e in errors])

    systems = [(s["name"], s["dim"]) for s in doc["systems"]]
    sizes = dict(systems)
    events = []
    for i, entry in enumerate(doc["events"]):
        try:
            events.append(_event(entry, systems, sizes))
        except (ValueError, KeyError, DimMismatch) as exc:
            msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
            raise ScenarioError([(f"events/{i}", str(msg))]) from None
    return Timeline(systems, events)


def _dims_of(targets, sizes) -> tuple[int, ...]:
    missing = [t for t in targets if t not in sizes]
    if missing:
        raise ValueError(f"undeclared system(s) {missing}")
    return tuple(sizes[t] for t in targets)


def _event(entry, systems, sizes):
    kind = entry["type"]
    if kind == "preselect":
        factor_entries = entry.get("factors") or [{"targets": [n for n, _ in systems], "state": entry["state"]}]
        factors = []
        for f in factor_entries:
            state, name = _state(f["state"], _dims_of(f["targets"], sizes))
            factors.append(Factor(tuple(f["targets"]), state, name))
        return Preselect(tuple(factors))
    if kind == "unitary":
        dims = _dims_of(entry["targets"], sizes)
        entries = entry["ops"] if "ops" in entry else [entry["op"]]
        ops, names = zip(*(_operator(s, dims) for s in entries))
        return Unitary(tuple(entry["targets"]), ops, entry.get("controlled_by"), names)
    if kind == "measure":
        obs = _observable(entry["observable"], _dims_of(entry["targets"], sizes))
        return Measure(obs, tuple(entry["targets"]), entry["label"])
    if kind == "postselect":
        return Postselect(entry["label"], entry["outcome"])
    return Guard(tuple(entry["targets"]))


def load_scenario(path) -> Timeline:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError([("(document)", f"invalid JSON: {exc}")]) from None
    return parse_scenario(doc)


# ---------------------------------------------------------------- encoding


def _enc_complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _enc_vector(v) -> list:
    return [_enc_complex(z) for z in np.asarray(v).reshape(-1)]


def _enc_matrix(m) -> list:
    return [_enc_vector(row) for row in np.asarray(m)]


def _enc_state(state: ForwardState, name: str | None):
    return name if name is not None else _enc_vector(state.vector)


def _enc_observable(obs: Observable):
    if obs.name is not None:
        return obs.name
    if obs.origin is not None:
        kind, data = obs.origin
        if kind == "projector":
            return {"projector": data if isinstance(data, str) else _enc_vector(data.vector)}
        if kind == "matrix":
            return {"matrix": _enc_matrix(data)}
    return {"matrix": _enc_matrix(obs.matrix)}


def timeline_to_doc(t: Timeline) -> dict:
    """Inverse of :func:`parse_scenario` (named constants stay named)."""
    events = []
    for e in t.events:
        if isinstance(e, Preselect):
            events.append(
                {
                    "type": "preselect",
                    "factors": [
                        {"targets": list(f.targets), "state": _enc_state(f.state, f.name)} for f in e.factors
                    ],
                }
            )
        elif isinstance(e, Unitary):
            ops = [n if n is not None else _enc_matrix(op.matrix) for op, n in zip(e.ops, e.names)]
            if e.controlled_by is None:
                events.append({"type": "unitary", "targets": list(e.targets), "op": ops[0]})
            else:
                events.append(
                    {"type": "unitary", "targets": list(e.targets), "controlled_by": e.controlled_by, "ops": ops}
                )
        elif isinstance(e, Measure):
            events.append(
                {
                    "type": "measure",
                    "targets": list(e.targets),
                    "observable": _enc_observable(e.observable),
                    "label": e.label,
                }
            )
        elif isinstance(e, Postselect):
            events.append({"type": "postselect", "label": e.label, "outcome": int(e.outcome)})
        elif isinstance(e, Guard):
            events.append({"type": "guard", "targets": list(e.targets)})
    return {
        "version": SCHEMA_VERSION,
        "systems": [{"name": n, "dim": d} for n, d in t.systems],
        "events": events,
    }


def dumps_scenario(t: Timeline) -> str:
    return json.dumps(timeline_to_doc(t), indent=2)


# ---------------------------------------------------------------- results


def result_to_doc(run: RunResult, headline: dict | None = None, **metadata) -> dict:
    """JSON-ready result: per-measurement conditionals plus run metadata."""
    measurements = {}
    for label in run.labels:
        dist = run.conditional(label)
        se = run.standard_errors(label)
        rows = []
        for i, (lam, p) in enumerate(zip(dist.eigenvalues, dist.probabilities)):
            row = {"index": i, "eigenvalue": float(lam), "probability": float(p)}
            if run.sampled:
                row["stderr"] = float(se[i])
            rows.append(row)
        measurements[label] = rows
    meta = {
        "version": __version__,
        "engine": "sampled" if run.sampled else "exact",
        "seed": run.seed,
        "shots": run.shots,
        "accepted": run.accepted,
    }
    meta.update(metadata)
    doc = {
        "metadata": meta,
        "postselection_probability": float(run.postselection_probability),
        "branch_count": int(run.branch_count),
        "postselected": dict(run.postselected),
        "measurements": measurements,
    }
    if headline is not None:
        doc["headline"] = headline
    return doc


CSV_FIELDS = ("label", "index", "eigenvalue", "probability")


def result_to_csv(doc: dict) -> str:
    """One row per (measurement label, outcome), same numbers as the JSON document."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for label, rows in doc["measurements"].items():
        for row in rows:
            writer.writerow([label, row["index"], repr(row["eigenvalue"]), repr(row["probability"])])
    return out.getvalue()


def result_to_table(doc: dict) -> str:
    """Human-readable table, probabilities to 12 significant digits."""
    lines = [f"{'measurement':<16}{'outcome':>8}{'eigenvalue':>14}{'probability':>20}"]
    for label, rows in doc["measurements"].items():
        for row in rows:
            lines.append(
                f"{label:<16}{row['index']:>8}{row['eigenvalue']:>14.6g}{row['probability']:>20.12g}"
            )
    lines.append(f"post-selection probability: {doc['postselection_probability']:.12g}")
    return "\n".join(lines)

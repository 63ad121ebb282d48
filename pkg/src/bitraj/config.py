"""JSON run configurations.

Matrices are written as ``{"re": [[...]], "im": [[...]]}``; ``im`` may be
omitted.  A minimal document::

    {
      "system": {"dim": 2, "hamiltonian": {"re": [[0, 0], [0, 0]]}},
      "observables": [
        {"name": "Z", "outcomes": [1, -1],
         "projectors": [{"re": [[1, 0], [0, 0]]}, {"re": [[0, 0], [0, 1]]}]}
      ],
      "initialization": {"time": 0, "weights": [{"observable": "Z", "outcome": 1, "p": 1}]}
    }

Observables give either explicit ``projectors`` (with ``outcomes``) or a
Hermitian ``matrix`` whose distinct eigenvalues become the outcomes.
"""
import json
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .errors import DimensionMismatch, InvalidObservable, SchemaError, UnknownOutcome, WeightSumError
from .system import InitializationEvent, MeasurementSchedule, Observable, QuantumSystem, initialize, observable_from_matrix

OUTCOME_MATCH_TOL = 1e-8

_MATRIX = {
    "type": "object",
    "required": ["re"],
    "additionalProperties": False,
    "properties": {
        "re": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "im": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
    },
}
_OUTCOME = {"type": ["number", "string"]}

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["system", "observables"],
    "additionalProperties": False,
    "properties": {
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "system": {
            "type": "object",
            "required": ["dim", "hamiltonian"],
            "additionalProperties": False,
            "properties": {"dim": {"type": "integer", "minimum": 2}, "hamiltonian": _MATRIX},
        },
        "observables": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "outcomes": {"type": "array", "items": _OUTCOME},
                    "projectors": {"type": "array", "items": _MATRIX},
                    "matrix": _MATRIX,
                },
                "oneOf": [{"required": ["projectors", "outcomes"]}, {"required": ["matrix"]}],
            },
        },
        "initialization": {
            "type": "object",
            "required": ["weights"],
            "additionalProperties": False,
            "properties": {
                "time": {"type": "number"},
                "weights": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["observable", "outcome", "p"],
                        "additionalProperties": False,
                        "properties": {"observable": {"type": "string"}, "outcome": _OUTCOME,
                                       "p": {"type": "number", "minimum": 0}},
                    },
                },
            },
        },
        "schedules": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["entries"],
                "additionalProperties": False,
                "properties": {
                    "entries": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["time", "observable"],
                            "additionalProperties": False,
                            "properties": {"time": {"type": "number"}, "observable": {"type": "string"}},
                        },
                    }
                },
            },
        },
        "experiments": {
            "type": "array",
            "items": {"type": "object", "required": ["kind"], "properties": {"kind": {"type": "string"},
                                                                            "label": {"type": "string"}}},
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"equality": {"type": "number", "exclusiveMinimum": 0},
                           "psd": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
}


@dataclass
class RunConfig:
    system: QuantumSystem
    observables: dict
    init: InitializationEvent = None
    schedules: dict = field(default_factory=dict)
    experiments: list = field(default_factory=list)
    tol_equality: float = 1e-10
    tol_psd: float = 1e-10
    seed: int = None
    description: str = ""


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _matrix(doc: dict, dim: int, path: str) -> np.ndarray:
    re = np.array(doc["re"], dtype=float)
    im = np.array(doc.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise DimensionMismatch(f"{path}: expected a {dim}x{dim} matrix, got re {re.shape}, im {im.shape}")
    return re + 1j * im


def _hermitian(doc: dict, dim: int, path: str, tol: float = 1e-10) -> np.ndarray:
    m = _matrix(doc, dim, path)
    asym = np.abs(m - m.conj().T)
    scale = max(float(np.max(np.abs(m))), 1.0)
    if asym.max() > tol * scale:
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        raise SchemaError(f"{path}[{i}][{j}]", f"matrix is not Hermitian: entry {m[i, j]} vs conjugate of [{j}][{i}] "
                                               f"{m[j, i]}")
    return 0.5 * (m + m.conj().T)


def resolve_outcome(obs: Observable, value):
    """Exact outcome match, else the unique numeric outcome within tolerance."""
    if value in obs.outcomes:
        return obs.outcomes[obs.outcomes.index(value)]
    if isinstance(value, (int, float)):
        close = [f for f in obs.outcomes if isinstance(f, (int, float)) and abs(f - value) <= OUTCOME_MATCH_TOL]
        if len(close) == 1:
            return close[0]
    raise UnknownOutcome(f"{value!r} is not an outcome of {obs.name} {obs.outcomes}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document.

    Raises :class:`SchemaError` (with the JSON path), ``DimensionMismatch``
    or ``WeightSumError``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"invalid JSON: {e}") from None
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise SchemaError(_path(e.absolute_path), e.message)
    dim = doc["system"]["dim"]
    sys = QuantumSystem(_hermitian(doc["system"]["hamiltonian"], dim, "$.system.hamiltonian"))
    observables = {}
    for i, o in enumerate(doc["observables"]):
        path = f"$.observables[{i}]"
        if o["name"] in observables:
            raise SchemaError(f"{path}.name", f"duplicate observable name {o['name']!r}")
        try:
            if "matrix" in o:
                obs = observable_from_matrix(sys, _hermitian(o["matrix"], dim, f"{path}.matrix"), o["name"])
            else:
                projs = [_matrix(p, dim, f"{path}.projectors[{k}]") for k, p in enumerate(o["projectors"])]
                obs = Observable(o["name"], tuple(o["outcomes"]), np.array(projs))
        except InvalidObservable as e:
            raise SchemaError(path, str(e)) from None
        observables[o["name"]] = obs

    def lookup(name, path):
        if name not in observables:
            raise SchemaError(path, f"unknown observable {name!r}")
        return observables[name]

    init = None
    if "initialization" in doc:
        idoc = doc["initialization"]
        weights = []
        for i, w in enumerate(idoc["weights"]):
            path = f"$.initialization.weights[{i}]"
            obs = lookup(w["observable"], f"{path}.observable")
            try:
                weights.append((obs, resolve_outcome(obs, w["outcome"]), w["p"]))
            except UnknownOutcome as e:
                raise SchemaError(f"{path}.outcome", str(e)) from None
        total = sum(p for _, _, p in weights)
        if abs(total - 1.0) > 1e-9:
            raise WeightSumError(f"$.initialization.weights: weights sum to {total:.12g}, expected 1")
        init = initialize(sys, weights, float(idoc.get("time", 0.0)))
    schedules = {}
    for name, sdoc in doc.get("schedules", {}).items():
        if init is None:
            raise SchemaError("$.initialization", "schedules need an initialization")
        entries = tuple((e["time"], lookup(e["observable"], f"$.schedules.{name}.entries[{k}].observable"))
                        for k, e in enumerate(sdoc["entries"]))
        try:
            schedules[name] = MeasurementSchedule(init.time, entries)
        except ValueError as e:
            raise SchemaError(f"$.schedules.{name}", str(e)) from None
    tol = doc.get("tolerances", {})
    return RunConfig(sys, observables, init, schedules, list(doc.get("experiments", [])),
                     tol.get("equality", 1e-10), tol.get("psd", 1e-10), doc.get("seed"), doc.get("description", ""))


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())

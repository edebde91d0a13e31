"""JSON model definition files.

Each document has a ``type`` and type-specific fields::

    {"type": "feynman_kac", "states": 2, "potentials": [[1, 2]],
     "mutations": [[[0.7, 0.3], [0.4, 0.6]]], "epsilons": [0.0],
     "initial": [0.5, 0.5], "horizon": 3}

    {"type": "mckean_gas", "states": 2, "nu": [1, 1],
     "collision_weights": [[1, 0], [0, 1]], "post_collision": [...],
     "initial": [0.7, 0.3], "horizon": 5}

    {"type": "two_velocities", "p_plus": 0.3, "horizon": 5}

    {"type": "gaussian", "drift": {"a": {"kind": "polynomial", "coef": [0, 0.5]},
                                   "b": {"kind": "tanh"},
                                   "c": {"kind": "constant", "value": 0.3}},
     "noise_variance": 1.0, "initial": {"mean": 0, "variance": 1}, "horizon": 3}

All types accept an optional ``test_functions`` list: value vectors for
finite models, function descriptions for the Gaussian model.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..errors import ModelError
from .feynman_kac import FeynmanKacModel
from .functions import function_from_dict
from .gas import McKeanGasModel, two_velocities
from .gaussian import GaussianMeanFieldModel

SCHEMA_VERSION = 1

_ALLOWED = {
    "feynman_kac": {"states", "potentials", "mutations", "epsilons", "initial", "state_values"},
    "mckean_gas": {"states", "nu", "collision_weights", "post_collision", "initial", "state_values"},
    "two_velocities": {"p_plus", "initial"},
    "gaussian": {"drift", "noise_variance", "initial"},
}
_COMMON = {"type", "horizon", "test_functions", "schema_version", "name", "description"}


@dataclass
class ModelSpec:
    """A parsed model file: the model plus run metadata stored alongside it."""

    model: Any
    horizon: int = 0
    test_functions: Optional[List[Tuple[str, Any]]] = None
    source: Dict[str, Any] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.source.get("type", "")


def _require(doc, key):
    if key not in doc:
        raise ModelError(f"model of type {doc['type']!r} requires field {key!r}")
    return doc[key]


def _check_states(doc, n):
    if "states" in doc and int(doc["states"]) != n:
        raise ModelError(f"'states' is {doc['states']} but the arrays describe {n} states")


def model_from_dict(doc: Dict[str, Any]) -> ModelSpec:
    if not isinstance(doc, dict) or "type" not in doc:
        raise ModelError("model definition must be an object with a 'type' field")
    kind = doc["type"]
    if kind not in _ALLOWED:
        raise ModelError(f"unknown model type {kind!r}; expected one of {sorted(_ALLOWED)}")
    unknown = set(doc) - _ALLOWED[kind] - _COMMON
    if unknown:
        raise ModelError(f"unknown keys for {kind!r} model: {sorted(unknown)}")

    if kind == "feynman_kac":
        model = FeynmanKacModel(
            potentials=_require(doc, "potentials"),
            mutations=_require(doc, "mutations"),
            epsilons=doc.get("epsilons", [0.0]),
            initial=doc.get("initial"),
            state_values=doc.get("state_values"),
        )
        _check_states(doc, model.n_states)
    elif kind == "mckean_gas":
        model = McKeanGasModel(
            collision_weights=_require(doc, "collision_weights"),
            nu=_require(doc, "nu"),
            post_collision=_require(doc, "post_collision"),
            initial=_require(doc, "initial"),
            state_values=doc.get("state_values"),
        )
        _check_states(doc, model.n_states)
    elif kind == "two_velocities":
        if "p_plus" in doc:
            model = two_velocities(float(doc["p_plus"]))
        else:
            init = _require(doc, "initial")
            model = two_velocities(float(init[1]))
    else:
        drift = _require(doc, "drift")
        missing = {"a", "b", "c"} - set(drift)
        if missing:
            raise ModelError(f"gaussian drift is missing components {sorted(missing)}")
        init = doc.get("initial", {"mean": 0.0, "variance": 1.0})
        model = GaussianMeanFieldModel(
            drift_a=function_from_dict(drift["a"]),
            drift_b=function_from_dict(drift["b"]),
            drift_c=function_from_dict(drift["c"]),
            noise_variance=doc.get("noise_variance", 1.0),
            initial_mean=init.get("mean", 0.0),
            initial_variance=init.get("variance", 1.0),
        )

    horizon = int(doc.get("horizon", 0))
    if horizon < 0:
        raise ModelError("horizon must be nonnegative")
    tests = None
    if "test_functions" in doc:
        tests = []
        for i, f in enumerate(doc["test_functions"]):
            if kind == "gaussian":
                tests.append((f"f{i}", function_from_dict(f)))
            else:
                v = np.asarray(f, dtype=float)
                if v.shape != (model.n_states,):
                    raise ModelError(f"test function {i} must have {model.n_states} values")
                tests.append((f"f{i}", v))
    return ModelSpec(model=model, horizon=horizon, test_functions=tests, source=dict(doc))


def load_model(path) -> ModelSpec:
    """Read a model file; JSON syntax errors are reported with line numbers."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return model_from_dict(doc)


def two_state_fk_document(horizon: int = 3) -> Dict[str, Any]:
    """Model document for the 2-state reference Feynman-Kac model."""
    return {
        "type": "feynman_kac",
        "states": 2,
        "potentials": [[1.0, 2.0]],
        "mutations": [[[0.7, 0.3], [0.4, 0.6]]],
        "epsilons": [0.0],
        "initial": [0.5, 0.5],
        "horizon": horizon,
    }

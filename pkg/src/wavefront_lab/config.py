"""Run configuration: a single JSON document with a model and a command block.

Example::

    {
      "model": {"type": "scalar",
                "f": {"kind": "linear", "a": 1},
                "g": {"kind": "saturating", "p": 2, "b": 1},
                "kernel": {"family": "point_mass", "h": 0, "a": 0},
                "L": 2},
      "command": {"c": 3.0, "speeds": [1, 2, 3]},
      "seed": 0
    }

Epidemic models replace ``kernel`` by ``alpha``, ``P`` (temporal law) and
``K_space`` (spatial kernel); population models add ``D`` and ``gamma``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import kernels
from .errors import ConfigError, ModelError
from .nonlinear import Nonlinearity, WaveModel
from .systems import EpidemicModel, PopulationModel

MODEL_TYPES = ("scalar", "epidemic", "population")

# command fields: name -> (type, default)
COMMAND_FIELDS = {
    "c": (float, None),
    "speeds": (list, None),
    "below": (list, None),
    "T": (float, None),
    "h": (float, None),
    "tol": (float, 1e-8),
    "max_iter": (int, 5000),
    "theta": (float, 0.5),
    "left_extension": (str, "tail"),
    "seeds": (list, ["step", "tanh"]),
    "init": (str, "tanh"),
    "M": (float, None),
}


def _number(d, key, path, required=True, positive=False):
    if key not in d:
        if required:
            raise ConfigError(f"missing field '{key}'", f"{path}.{key}")
        return None
    v = d[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {v!r}", f"{path}.{key}")
    if positive and v <= 0:
        raise ConfigError(f"must be positive, got {v!r}", f"{path}.{key}")
    return float(v)


def _need(d, key, path):
    if key not in d:
        raise ConfigError(f"missing field '{key}'", key if path == "$" else f"{path}.{key}")
    return d[key]


def parse_model(d, path="model"):
    if not isinstance(d, dict):
        raise ConfigError("expected an object", path)
    mtype = _need(d, "type", path)
    if mtype not in MODEL_TYPES:
        raise ConfigError(f"unknown model type {mtype!r}; expected one of {MODEL_TYPES}", f"{path}.type")
    f = Nonlinearity.from_dict(_need(d, "f", path), f"{path}.f")
    g = Nonlinearity.from_dict(_need(d, "g", path), f"{path}.g")
    L = _number(d, "L", path, required=False)
    try:
        if mtype == "scalar":
            K = kernels.kernel_from_dict(_need(d, "kernel", path), f"{path}.kernel")
            return WaveModel(f, g, K, L)
        if mtype == "epidemic":
            alpha = _number(d, "alpha", path, positive=True)
            P = kernels.temporal_from_dict(_need(d, "P", path), f"{path}.P")
            Ks = kernels.spatial_from_dict(_need(d, "K_space", path), f"{path}.K_space")
            model = EpidemicModel(alpha, P, Ks, f, g, L)
            model.scalar_model()  # structural checks on the reduced equation
            return model
        D = _number(d, "D", path, positive=True)
        gamma = _number(d, "gamma", path, positive=True)
        K = kernels.kernel_from_dict(_need(d, "kernel", path), f"{path}.kernel")
        model = PopulationModel(D, gamma, K, f, g, L)
        model.scalar_model()
        return model
    except ModelError as exc:
        raise ConfigError(str(exc), path) from exc


def model_to_dict(model):
    if isinstance(model, WaveModel):
        out = {"type": "scalar", "kernel": model.kernel.to_dict()}
    elif isinstance(model, EpidemicModel):
        out = {"type": "epidemic", "alpha": model.alpha, "P": model.P.to_dict(),
               "K_space": model.K_space.to_dict()}
    else:
        out = {"type": "population", "D": model.D, "gamma": model.gamma, "kernel": model.K.to_dict()}
    out["f"] = model.f.to_dict()
    out["g"] = model.g.to_dict()
    if model.L is not None:
        out["L"] = model.L
    return out


def parse_command(d, path="command"):
    if d is None:
        d = {}
    if not isinstance(d, dict):
        raise ConfigError("expected an object", path)
    unknown = sorted(set(d) - set(COMMAND_FIELDS))
    if unknown:
        raise ConfigError(f"unknown field '{unknown[0]}'", f"{path}.{unknown[0]}")
    out = {}
    for key, (typ, default) in COMMAND_FIELDS.items():
        if key not in d:
            if default is not None:
                out[key] = list(default) if isinstance(default, list) else default
            continue
        v = d[key]
        p = f"{path}.{key}"
        if typ is float:
            out[key] = _number(d, key, path)
        elif typ is int:
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ConfigError(f"expected a positive integer, got {v!r}", p)
            out[key] = v
        elif typ is str:
            if not isinstance(v, str):
                raise ConfigError(f"expected a string, got {v!r}", p)
            out[key] = v
        else:
            if not isinstance(v, list) or not v:
                raise ConfigError("expected a non-empty list", p)
            if key == "seeds":
                if not all(isinstance(x, str) for x in v):
                    raise ConfigError("expected a list of preset names", p)
                out[key] = list(v)
            else:
                vals = []
                for i, x in enumerate(v):
                    if not isinstance(x, (int, float)) or isinstance(x, bool) or not math.isfinite(x):
                        raise ConfigError(f"expected a finite number, got {x!r}", f"{p}[{i}]")
                    vals.append(float(x))
                if vals != sorted(vals):
                    raise ConfigError("speed grid must be sorted", p)
                out[key] = vals
    for key in ("T", "h", "tol", "M"):
        if key in out and out[key] <= 0:
            raise ConfigError(f"must be positive, got {out[key]!r}", f"{path}.{key}")
    return out


@dataclass
class RunConfig:
    model: object
    command: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("top level must be an object", "$")
        unknown = sorted(set(d) - {"model", "command", "seed"})
        if unknown:
            raise ConfigError(f"unknown field '{unknown[0]}'", unknown[0])
        model = parse_model(_need(d, "model", "$"))
        command = parse_command(d.get("command"))
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError(f"expected an integer, got {seed!r}", "seed")
        return cls(model, command, seed)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg} at line {exc.lineno}", str(path)) from exc
        return cls.from_dict(data)

    def to_dict(self):
        return {"model": model_to_dict(self.model), "command": dict(self.command), "seed": self.seed}

    def to_json(self):
        """Canonical form: sorted keys, fixed separators."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

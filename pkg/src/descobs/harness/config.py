"""Run configuration: JSON file format, schema validation and CLI overrides."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import jsonschema

from ..errors import ConfigError
from ..estimation import MODES

OBSERVERS = ("semi-explicit-gpebo", "canonical-strangeness-free", "canonical-zw")
REGRESSOR_CHOICES = ("projected", "output")
ESTIMATOR_STEPS = ("exponential", "rk4")
ZW_GAINS = ("lti", "diagonalizing")

_positive = {"type": "number", "exclusiveMinimum": 0}
_vector = {"type": "array", "items": {"type": "number"}}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "descobs run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario"],
    "properties": {
        "scenario": {"type": "string"},
        "t0": {"type": "number"},
        "t_final": {"type": "number"},
        "step": _positive,
        "estimator": {"enum": list(MODES)},
        "lambda": {"type": "array", "items": _positive, "minItems": 1},
        "gamma": {"oneOf": [_positive, {"type": "array", "items": _positive, "minItems": 1}]},
        "xi_a0": _vector,
        "eta0": _vector,
        "theta": _vector,
        "rho_threshold": _positive,
        "rank_tol": _positive,
        "out": {"type": "string"},
        "observer": {"enum": list(OBSERVERS)},
        "regressor": {"enum": list(REGRESSOR_CHOICES)},
        "estimator_step": {"enum": list(ESTIMATOR_STEPS)},
        "zw_gain": {"enum": list(ZW_GAINS)},
        "thresholds": {"type": "array", "items": _positive, "minItems": 1},
    },
}

# JSON key -> dataclass field
_KEYS = {
    "t_final": "t1",
    "step": "h",
    "lambda": "lam",
}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    t0: float = 0.0
    t1: float = 30.0
    h: float = 1e-3
    estimator: str = "filter-bank"
    lam: tuple = ()
    gamma: tuple = ()
    xi_a0: tuple = ()
    eta0: tuple | None = None
    theta: tuple = ()
    rho_threshold: float = 1e-6
    rank_tol: float = 1e-9
    out: str | None = None
    observer: str = ""
    regressor: str = "projected"
    estimator_step: str = "exponential"
    zw_gain: str = "lti"
    thresholds: tuple = field(default=(1e-1, 1e-2, 1e-3))

    @property
    def n_steps(self) -> int:
        return int(math.floor((self.t1 - self.t0) / self.h + 1e-9))

    def to_json(self) -> dict:
        """Inverse of :func:`config_from_dict`; ``out`` and unset fields are omitted."""
        d = asdict(self)
        d.pop("out")
        inv = {v: k for k, v in _KEYS.items()}
        out = {}
        for k, v in d.items():
            if v is None:
                continue
            if isinstance(v, tuple):
                v = list(v)
            out[inv.get(k, k)] = v
        return out


def validate_document(doc: dict):
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return doc


def _tuple(v):
    if v is None:
        return None
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    return (float(v),)


def config_from_dict(doc: dict, defaults: dict | None = None) -> ScenarioConfig:
    """Validate ``doc`` against the schema and fill gaps from scenario ``defaults``.

    ``defaults`` uses the same JSON keys as ``doc``.
    """
    validate_document(doc)
    merged = dict(defaults or {})
    merged.update({k: v for k, v in doc.items() if v is not None})
    validate_document(merged)
    kw = {}
    for k, v in merged.items():
        name = _KEYS.get(k, k)
        if name in ("lam", "gamma", "xi_a0", "eta0", "theta", "thresholds"):
            v = _tuple(v)
        elif name in ("t0", "t1", "h", "rho_threshold", "rank_tol"):
            v = float(v)
        kw[name] = v
    cfg = ScenarioConfig(**kw)
    check_invariants(cfg)
    return cfg


def check_invariants(cfg: ScenarioConfig):
    nums = [cfg.t0, cfg.t1, cfg.h, *cfg.lam, *cfg.gamma, *cfg.xi_a0, *cfg.theta]
    if not all(math.isfinite(v) for v in nums):
        raise ConfigError("config values must be finite")
    if cfg.h <= 0:
        raise ConfigError(f"step must be positive, got {cfg.h!r}")
    if cfg.t1 < cfg.t0:
        raise ConfigError(f"t_final {cfg.t1!r} precedes t0 {cfg.t0!r}")
    if not cfg.lam or any(v <= 0 for v in cfg.lam):
        raise ConfigError("lambda must be a non-empty list of positive rates")
    if not cfg.gamma or any(v <= 0 for v in cfg.gamma):
        raise ConfigError("gamma must be positive")
    if cfg.observer not in OBSERVERS:
        raise ConfigError(f"unknown observer path {cfg.observer!r}")


def with_overrides(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    new = replace(cfg, **kw)
    check_invariants(new)
    return new

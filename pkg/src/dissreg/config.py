"""Run configuration: JSON document, schema validation and defaults."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from .operators import _is_conjugate_closed


class ConfigError(ValueError):
    pass


_number = {"type": "number"}
_auto_or_positive = {"oneOf": [{"const": "auto"}, {"type": "number", "minimum": 0}]}
_root = {"oneOf": [_number, {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}]}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["mode", "task", "operator", "lambda", "tau", "epochs"],
    "properties": {
        "mode": {"enum": ["forward", "global", "graph", "compare"]},
        "task": {"oneOf": [
            {"enum": ["sine", "cosine"]},
            {"type": "object", "additionalProperties": False, "required": ["csv"],
             "properties": {"csv": {"type": "string"}}},
        ]},
        "operator": {"oneOf": [
            {"type": "object", "additionalProperties": False, "required": ["h", "alpha", "theta"],
             "properties": {"h": {"enum": [1, 2]},
                            "alpha": {"type": "array", "items": _number, "minItems": 2},
                            "theta": _number, "mu": {"enum": [0, 1]}}},
            {"type": "object", "additionalProperties": False, "required": ["roots", "theta"],
             "properties": {"roots": {"type": "array", "items": _root, "minItems": 2},
                            "theta": _number, "alpha_h": _number}},
        ]},
        "lambda": _number,
        "tau": {"type": "number", "exclusiveMinimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "tau_prime": {"type": "number", "exclusiveMinimum": 0},
        "epochs": {"type": "integer", "minimum": 1},
        "supervised_epochs": {"type": "integer", "minimum": 0},
        "shuffle": {"oneOf": [
            {"type": "object", "additionalProperties": False, "required": ["kind"],
             "properties": {"kind": {"const": "none"}}},
            {"type": "object", "additionalProperties": False, "required": ["kind", "seed"],
             "properties": {"kind": {"enum": ["once", "per_epoch"]},
                            "seed": {"type": "integer", "minimum": 0}}},
        ]},
        "derivatives": {"enum": ["analytic", "finite_difference"]},
        "initial_state": {"type": "array", "items": _number},
        "trace": {"enum": ["all", "last"]},
        "graph": {"type": "object", "additionalProperties": False,
                  "properties": {"epsilon": _auto_or_positive, "sigma": _auto_or_positive,
                                 "rho": {"type": "integer", "minimum": 1},
                                 "eta": {"type": "number", "minimum": 0, "maximum": 1},
                                 "warmup": {"type": "integer", "minimum": 2}}},
        "boundary": {"oneOf": [
            {"type": "object", "additionalProperties": False, "required": ["kind"],
             "properties": {"kind": {"const": "periodic"}}},
            {"type": "object", "additionalProperties": False, "required": ["kind", "values"],
             "properties": {"kind": {"const": "cauchy"}, "values": {"type": "array", "items": _number}}},
        ]},
        "green": {"enum": ["causal", "noncausal"]},
        "convergence": {"type": "object", "additionalProperties": False, "required": ["C", "beta"],
                        "properties": {"C": {"type": "number", "minimum": 1},
                                       "beta": {"type": "number", "exclusiveMinimum": 0}}},
        "output_dir": {"type": "string"},
    },
}


@dataclass
class GraphParams:
    epsilon: Any = "auto"
    sigma: Any = "auto"
    rho: int = 3
    eta: float = 0.5
    warmup: int = 20


@dataclass
class RunConfig:
    mode: str
    task: Any
    operator: dict
    lam: float
    tau: float
    epochs: int
    T: float = 2 * np.pi
    tau_prime: Optional[float] = None
    supervised_epochs: Optional[int] = None
    shuffle: dict = field(default_factory=lambda: {"kind": "none"})
    derivatives: Optional[str] = None
    initial_state: Optional[list] = None
    trace: str = "all"
    graph: GraphParams = field(default_factory=GraphParams)
    boundary: dict = field(default_factory=lambda: {"kind": "periodic"})
    green: str = "causal"
    convergence: Optional[dict] = None
    output_dir: Optional[str] = None
    source: Optional[Path] = None

    @property
    def order_h(self) -> int:
        if "roots" in self.operator:
            return len(self.operator["roots"]) // 2
        return self.operator["h"]

    @property
    def roots(self) -> Optional[np.ndarray]:
        if "roots" not in self.operator:
            return None
        return np.array([complex(r[0], r[1]) if isinstance(r, list) else complex(r)
                         for r in self.operator["roots"]])


def _field_path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def parse_config(doc: dict, source: Path | None = None) -> RunConfig:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = list(validator.iter_errors(doc))
    if errors:
        # oneOf failures hide the useful message in the best-matching branch
        best = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"invalid field {_field_path(best)!r}: {best.message}")

    cfg = RunConfig(
        mode=doc["mode"], task=doc["task"], operator=doc["operator"], lam=float(doc["lambda"]),
        tau=float(doc["tau"]), epochs=doc["epochs"], T=float(doc.get("T", 2 * np.pi)),
        tau_prime=doc.get("tau_prime"), supervised_epochs=doc.get("supervised_epochs"),
        shuffle=doc.get("shuffle", {"kind": "none"}), derivatives=doc.get("derivatives"),
        initial_state=doc.get("initial_state"), trace=doc.get("trace", "all"),
        graph=GraphParams(**doc.get("graph", {})), boundary=doc.get("boundary", {"kind": "periodic"}),
        green=doc.get("green", "causal"), convergence=doc.get("convergence"),
        output_dir=doc.get("output_dir"), source=source,
    )
    if cfg.lam == 0:
        raise ConfigError("invalid field 'lambda': must be nonzero")
    if cfg.operator["theta"] <= 0:
        raise ConfigError("invalid field 'operator/theta': must be > 0")
    if "alpha" in cfg.operator:
        if len(cfg.operator["alpha"]) != cfg.operator["h"] + 1:
            raise ConfigError("invalid field 'operator/alpha': needs h + 1 coefficients")
        if cfg.operator["alpha"][-1] == 0:
            raise ConfigError("invalid field 'operator/alpha': leading coefficient must be nonzero")
    else:
        if len(cfg.operator["roots"]) % 2:
            raise ConfigError("invalid field 'operator/roots': needs an even number of roots")
        if not _is_conjugate_closed(cfg.roots):
            raise ConfigError("invalid field 'operator/roots': not closed under complex conjugation")
        if cfg.operator.get("alpha_h", 1.0) == 0:
            raise ConfigError("invalid field 'operator/alpha_h': must be nonzero")
    if cfg.tau_prime is None:
        cfg.tau_prime = cfg.tau
    if cfg.supervised_epochs is None:
        cfg.supervised_epochs = cfg.epochs
    if cfg.supervised_epochs > cfg.epochs:
        raise ConfigError("invalid field 'supervised_epochs': exceeds epochs")
    if cfg.derivatives is None:
        cfg.derivatives = "analytic" if cfg.shuffle["kind"] == "none" else "finite_difference"
    if cfg.initial_state is None:
        cfg.initial_state = [0.0] * (2 * cfg.order_h)
    if len(cfg.initial_state) != 2 * cfg.order_h:
        raise ConfigError(f"invalid field 'initial_state': needs {2 * cfg.order_h} entries")
    if cfg.boundary["kind"] == "cauchy" and len(cfg.boundary["values"]) != 2 * cfg.order_h:
        raise ConfigError(f"invalid field 'boundary/values': needs {2 * cfg.order_h} entries")
    if cfg.mode == "compare":
        if "alpha" not in cfg.operator:
            raise ConfigError("invalid field 'operator': compare mode needs alpha coefficients")
        if cfg.tau_prime != cfg.tau:
            raise ConfigError("invalid field 'tau_prime': compare mode needs tau_prime == tau")
        if cfg.shuffle["kind"] != "none":
            raise ConfigError("invalid field 'shuffle': compare mode needs time-ordered data")
    if isinstance(cfg.task, dict) and source is not None:
        cfg.task = {"csv": str((source.parent / cfg.task["csv"]).resolve())
                    if not Path(cfg.task["csv"]).is_absolute() else cfg.task["csv"]}
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(doc, source=path)

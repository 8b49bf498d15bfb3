"""Experiment configuration: JSON schema validation and default resolution."""

import copy
import json
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError, DomainError
from .lattice import LatticeBox
from .model import ModelParams, WeightDistribution

DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "constants": {"rel_tol": 1e-6},
    "generate": {"pair_budget": 10**9},
    "degrees": {"k": None, "radii": [], "w_values": [], "w_trials": 1000},
    "percolation": {"threshold": 0.5, "pair_budget": 10**9},
    "distances": {"realisations": 1, "block_bits": None, "frontier_guard": 5_000_000, "reach_hops": None},
}


def schema():
    text = resources.files("sfperc").joinpath("config_schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _path_of(error):
    return "/".join(str(p) for p in error.absolute_path) or "<root>"


def validate(raw):
    """Raise :class:`ConfigError` listing every offending key path."""
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        offending = []
        lines = []
        for e in errors:
            path = _path_of(e)
            if e.validator == "additionalProperties":
                extra = sorted(set(e.instance) - set(e.schema.get("properties", {})))
                for key in extra:
                    offending.append(f"{path}/{key}" if path != "<root>" else key)
            else:
                offending.append(path)
            lines.append(f"{path}: {e.message}")
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines), offending)


def resolve(raw):
    """Validated copy of ``raw`` with every default filled in.

    Resolving an already resolved config returns an equal document.
    """
    validate(raw)
    cfg = copy.deepcopy(raw)
    cfg.setdefault("seed", DEFAULTS["seed"])
    cfg.setdefault("threads", DEFAULTS["threads"])
    cfg["model"].setdefault("norm", "l2")
    w = cfg["model"]["weights"]
    w.setdefault("normalize_mean", False)
    if w["kind"] == "constant":
        w.setdefault("value", 1.0)
        extra = [k for k in ("tau", "min") if k in w]
    else:
        w.setdefault("min", 1.0)
        extra = [k for k in ("value",) if k in w]
        if "tau" not in w:
            raise ConfigError("Pareto weights need 'tau'", ["model/weights/tau"])
    if extra:
        raise ConfigError(f"keys {extra} do not apply to {w['kind']} weights",
                          [f"model/weights/{k}" for k in extra])
    if "geometry" in cfg:
        cfg["geometry"].setdefault("boundary", "torus")
    for block, defaults in DEFAULTS.items():
        if isinstance(defaults, dict) and block in cfg:
            for key, value in defaults.items():
                cfg[block].setdefault(key, copy.deepcopy(value))
    build_params(cfg)
    return cfg


def load(path):
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", ["<file>"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", ["<file>"]) from exc
    return raw


def build_params(cfg):
    m = cfg["model"]
    w = m["weights"]
    try:
        if w["kind"] == "constant":
            dist = WeightDistribution.constant(w.get("value", 1.0), w.get("normalize_mean", False))
        else:
            dist = WeightDistribution.pareto(w["tau"], w.get("min", 1.0), w.get("normalize_mean", False))
        return ModelParams(m["dimension"], float(m["alpha"]), float(m["lambda"]), dist, m.get("norm", "l2"))
    except DomainError as exc:
        raise ConfigError(str(exc), ["model"]) from exc


def build_box(cfg):
    if "geometry" not in cfg:
        raise ConfigError("this command needs a 'geometry' block", ["geometry"])
    g = cfg["geometry"]
    try:
        return LatticeBox(cfg["model"]["dimension"], g["side"], g.get("boundary", "torus"))
    except DomainError as exc:
        raise ConfigError(str(exc), ["geometry"]) from exc


def require(cfg, block):
    if block not in cfg:
        raise ConfigError(f"this command needs a '{block}' block", [block])
    return cfg[block]

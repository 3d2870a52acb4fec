"""Run configuration: JSON schema, defaults, and conversion to solver objects.

All defaults live in :data:`DEFAULTS`; omitted fields are filled from it
before validation.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema

from .equilibrium import SolverConfig
from .harmonics import Profile

DEFAULTS = {
    "profile": {"type": "polynomial", "terms": [{"exps": [0, 0, 0], "coef": 1.0}]},
    "max_degree": 8,
    "quadrature": {"n_polar": 64, "n_azimuth": 128},
    "solver": {"grad_tol": 1e-10, "max_iter": 200},
    "continuation": {"eps0": 0.1, "eps_factor": 0.5, "eps_steps": 20, "degeneracy_ratio": 1e-3},
    "verify": {"n_support": 200, "n_rays": 200, "constancy_tol": 1e-7, "exterior_tol": 1e-8},
    "energy": {"resolution": 32, "levels": 6},
    "output": {"report": None, "csv": None},
}

_POS = {"type": "number", "exclusiveMinimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "profile": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "terms"],
                    "properties": {
                        "type": {"const": "polynomial"},
                        "terms": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["exps", "coef"],
                                "properties": {
                                    "exps": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                             "minItems": 3, "maxItems": 3},
                                    "coef": {"type": "number"},
                                },
                            },
                        },
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "coeffs"],
                    "properties": {
                        "type": {"const": "harmonic"},
                        "coeffs": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["degree", "order", "value"],
                                "properties": {
                                    "degree": {"type": "integer", "minimum": 0, "multipleOf": 2},
                                    "order": {"type": "integer"},
                                    "value": {"type": "number"},
                                },
                            },
                        },
                    },
                },
            ]
        },
        "max_degree": {"type": "integer", "minimum": 0, "multipleOf": 2},
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n_polar": {"type": "integer", "minimum": 4},
                           "n_azimuth": {"type": "integer", "minimum": 8, "multipleOf": 2}},
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"grad_tol": _POS, "max_iter": _POS_INT},
        },
        "continuation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "eps0": _POS,
                "eps_factor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "eps_steps": {"type": "integer", "minimum": 2},
                "degeneracy_ratio": _POS,
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n_support": _POS_INT, "n_rays": _POS_INT, "constancy_tol": _POS, "exterior_tol": _POS},
        },
        "energy": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"resolution": {"type": "integer", "minimum": 8}, "levels": {"type": "integer", "minimum": 3}},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"report": {"type": ["string", "null"]}, "csv": {"type": ["string", "null"]}},
        },
    },
}


class ConfigError(ValueError):
    """Configuration file is unreadable or fails validation."""


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(val, dict) and key != "profile":
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def validate(raw: dict) -> dict:
    """Validate a raw config and return it with every default filled in."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    try:
        jsonschema.validate(raw, SCHEMA)
        full = _merge(DEFAULTS, raw)
        jsonschema.validate(full, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    return full


def load(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return validate(raw)


def build_profile(cfg: dict) -> Profile:
    entry, deg = cfg["profile"], cfg["max_degree"]
    try:
        if entry["type"] == "polynomial":
            return Profile.from_polynomial([(t["exps"], t["coef"]) for t in entry["terms"]], deg)
        return Profile.from_harmonic(entry["coeffs"], deg)
    except ValueError as exc:
        raise ConfigError(f"invalid profile: {exc}") from None


def build_solver_config(cfg: dict) -> SolverConfig:
    return SolverConfig(
        grad_tol=cfg["solver"]["grad_tol"],
        max_iter=cfg["solver"]["max_iter"],
        eps0=cfg["continuation"]["eps0"],
        eps_factor=cfg["continuation"]["eps_factor"],
        eps_steps=cfg["continuation"]["eps_steps"],
        degeneracy_ratio=cfg["continuation"]["degeneracy_ratio"],
        n_polar=cfg["quadrature"]["n_polar"],
        n_azimuth=cfg["quadrature"]["n_azimuth"],
    )

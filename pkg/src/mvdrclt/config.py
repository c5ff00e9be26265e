"""JSON experiment configuration: schema validation and conversion to a
:class:`~mvdrclt.model.Scenario`."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .model import ExplicitSpatial, Mode, Scenario, TemporalSpec, UlaSpatial

_NUMBER_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_NUMBER_VECTOR = {"type": "array", "items": {"type": "number"}}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["M", "N", "alpha", "mode", "spatial", "temporal"],
    "properties": {
        "M": {"type": "integer", "minimum": 1},
        "N": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "mode": {"enum": [m.value for m in Mode]},
        "reps": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "bins": {"type": "integer", "minimum": 1},
        "spatial": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {
                        "type": {"const": "ula"},
                        "soi_angle_deg": {"type": "number"},
                        "interferer_angles_deg": _NUMBER_VECTOR,
                        "interferer_power": {"type": "number", "minimum": 0},
                        "noise_power": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "R0_real", "s_real"],
                    "properties": {
                        "type": {"const": "explicit"},
                        "R0_real": _NUMBER_MATRIX,
                        "R0_imag": _NUMBER_MATRIX,
                        "s_real": _NUMBER_VECTOR,
                        "s_imag": _NUMBER_VECTOR,
                    },
                },
            ]
        },
        "temporal": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["identity", "exp_toeplitz", "ar1"]},
                "psi": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
            },
        },
    },
}

DEFAULT_REPS = 10_000
DEFAULT_SEED = 0
DEFAULT_BINS = 50


class ConfigError(ValueError):
    """Configuration that fails schema or semantic validation."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    reps: int = DEFAULT_REPS
    seed: int = DEFAULT_SEED
    bins: int = DEFAULT_BINS

    @property
    def M(self) -> int:
        return self.scenario.M

    @property
    def N(self) -> int:
        return self.scenario.N

    @property
    def mode(self) -> Mode:
        return self.scenario.mode


def _spatial(doc: dict):
    if doc["type"] == "ula":
        return UlaSpatial(
            soi_angle_deg=float(doc.get("soi_angle_deg", 0.0)),
            interferer_angles_deg=tuple(float(a) for a in doc.get("interferer_angles_deg", ())),
            interferer_power=float(doc.get("interferer_power", 10.0)),
            noise_power=float(doc.get("noise_power", 1.0)),
        )
    R0 = np.array(doc["R0_real"], dtype=float)
    s = np.array(doc["s_real"], dtype=float)
    try:
        if "R0_imag" in doc:
            R0 = R0 + 1j * np.array(doc["R0_imag"], dtype=float)
        if "s_imag" in doc:
            s = s + 1j * np.array(doc["s_imag"], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"explicit spatial spec: {exc}") from exc
    return ExplicitSpatial(R0=R0, s=s)


def parse_config(doc) -> ExperimentConfig:
    """Validate a decoded JSON document and build the experiment config.

    Raises:
        ConfigError: on unknown keys, wrong types or invalid values.
    """
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from exc
    temporal = doc["temporal"]
    if temporal["type"] == "ar1" and "psi" not in temporal:
        raise ConfigError("temporal: ar1 requires psi")
    try:
        scenario = Scenario(
            M=doc["M"],
            N=doc["N"],
            alpha=float(doc["alpha"]),
            mode=Mode(doc["mode"]),
            spatial=_spatial(doc["spatial"]),
            temporal=TemporalSpec(temporal["type"], float(temporal.get("psi", 0.0))),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(
        scenario=scenario,
        reps=doc.get("reps", DEFAULT_REPS),
        seed=doc.get("seed", DEFAULT_SEED),
        bins=doc.get("bins", DEFAULT_BINS),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(doc)

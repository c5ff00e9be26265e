"""Deterministic equivalents and CLT variances for the SNR of diagonally
loaded MVDR filters, with a reproducible Monte Carlo for validation."""

from .asymptotics import AsymptoticPrediction, predict
from .deteq import DetEq, check_bounds, solve, solve_fixed_point
from .model import CanonicalModel, Mode, Scenario, canonicalize, diagonal_model
from .montecarlo import McConfig, McSamples, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AsymptoticPrediction",
    "CanonicalModel",
    "DetEq",
    "McConfig",
    "McSamples",
    "Mode",
    "Scenario",
    "canonicalize",
    "check_bounds",
    "diagonal_model",
    "predict",
    "run_experiment",
    "solve",
    "solve_fixed_point",
]

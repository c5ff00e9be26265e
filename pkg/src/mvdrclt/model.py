"""Scenario construction (spatial/temporal covariances, signature) and the
reduction to the diagonal form used by the asymptotic formulas."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .linalg import LinAlgError, check_hermitian, cholesky, hermitian_eigen


class Mode(str, Enum):
    SUPERVISED = "supervised"
    UNSUPERVISED = "unsupervised"
    MSE = "mse"

    @property
    def signal_in_training(self) -> bool:
        # LMMSE filtering is analysed on SOI-contaminated samples (R1).
        return self is not Mode.SUPERVISED


@dataclass(frozen=True)
class UlaSpatial:
    soi_angle_deg: float = 0.0
    interferer_angles_deg: tuple[float, ...] = ()
    interferer_power: float = 10.0
    noise_power: float = 1.0

    def __post_init__(self):
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if self.interferer_power < 0:
            raise ValueError("interferer_power must be non-negative")


@dataclass(frozen=True, eq=False)
class ExplicitSpatial:
    R0: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class TemporalSpec:
    kind: str = "identity"  # identity | exp_toeplitz | ar1
    psi: float = 0.0

    def __post_init__(self):
        if self.kind not in ("identity", "exp_toeplitz", "ar1"):
            raise ValueError(f"unknown temporal kind {self.kind!r}")
        if self.kind == "ar1" and not abs(self.psi) < 1:
            raise ValueError(f"ar1 requires |psi| < 1, got {self.psi}")


SpatialSpec = Union[UlaSpatial, ExplicitSpatial]


@dataclass(frozen=True)
class Scenario:
    M: int
    N: int
    alpha: float
    mode: Mode = Mode.SUPERVISED
    spatial: SpatialSpec = field(default_factory=UlaSpatial)
    temporal: TemporalSpec = field(default_factory=TemporalSpec)

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be positive")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass(frozen=True, eq=False)
class CanonicalModel:
    """Scenario rotated so that spatial and temporal covariances are diagonal.

    Attributes:
        lam: eigenvalues of the training spatial covariance (R0 or ss* + R0).
        t: eigenvalues of the temporal covariance.
        u: whitened signature ``Lambda^{-1/2} U^H s`` in the eigenbasis.
        snr_opt: ``s^H R0^{-1} s``, independent of the training mode.
    """

    lam: np.ndarray
    t: np.ndarray
    u: np.ndarray
    alpha: float
    mode: Mode
    snr_opt: float

    @property
    def M(self) -> int:
        return self.lam.size

    @property
    def N(self) -> int:
        return self.t.size

    @property
    def c(self) -> float:
        return self.M / self.N

    @property
    def u_weights(self) -> np.ndarray:
        return np.abs(self.u) ** 2


def ula_steering(angle_deg: float, M: int) -> np.ndarray:
    """Unit-norm steering vector of a half-wavelength uniform linear array."""
    if M < 1:
        raise ValueError("M must be at least 1")
    phase = np.pi * np.sin(np.deg2rad(angle_deg))
    return np.exp(1j * phase * np.arange(M)) / np.sqrt(M)


def build_spatial(spec: SpatialSpec, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(R0, s)``: interference-plus-noise covariance and unit signature."""
    if isinstance(spec, UlaSpatial):
        s = ula_steering(spec.soi_angle_deg, M)
        R0 = spec.noise_power * np.eye(M, dtype=complex)
        for angle in spec.interferer_angles_deg:
            a = ula_steering(angle, M)
            R0 += spec.interferer_power * np.outer(a, a.conj())
        return R0, s
    R0 = check_hermitian(spec.R0)
    s = np.asarray(spec.s, dtype=complex)
    if R0.shape != (M, M) or s.shape != (M,):
        raise ValueError(f"explicit spatial spec must be {M}x{M} with an {M}-vector signature")
    if abs(np.linalg.norm(s) - 1.0) > 1e-12:
        raise ValueError(f"signature must have unit norm, got {np.linalg.norm(s):.15g}")
    try:
        cholesky(R0)
    except LinAlgError as exc:
        raise ValueError(f"R0 is not positive definite: {exc}") from exc
    return R0, s


def build_temporal(spec: TemporalSpec, N: int) -> np.ndarray:
    if N < 1:
        raise ValueError("N must be at least 1")
    lag = np.abs(np.subtract.outer(np.arange(N), np.arange(N)))
    if spec.kind == "identity":
        return np.eye(N)
    if spec.kind == "exp_toeplitz":
        return np.exp(-lag.astype(float))
    return spec.psi ** lag / (1.0 - spec.psi**2)


def canonicalize(scenario: Scenario) -> CanonicalModel:
    R0, s = build_spatial(scenario.spatial, scenario.M)
    T = build_temporal(scenario.temporal, scenario.N)
    return canonicalize_matrices(R0, s, T, scenario.alpha, scenario.mode)


def canonicalize_matrices(R0, s, T, alpha: float, mode: Mode | str) -> CanonicalModel:
    mode = Mode(mode)
    R0 = np.asarray(R0, dtype=complex)
    s = np.asarray(s, dtype=complex)
    R = R0 + np.outer(s, s.conj()) if mode.signal_in_training else R0

    spatial = hermitian_eigen(R)
    temporal = hermitian_eigen(np.asarray(T, dtype=complex))
    if np.any(spatial.eigenvalues <= 0) or np.any(temporal.eigenvalues <= 0):
        raise ValueError("covariances must be positive definite")

    u = (spatial.basis.conj().T @ s) / np.sqrt(spatial.eigenvalues)
    if mode.signal_in_training:
        snr_opt = _snr_opt(R0, s)
    else:
        snr_opt = float(np.sum(np.abs(u) ** 2))
    return CanonicalModel(
        lam=spatial.eigenvalues,
        t=temporal.eigenvalues,
        u=u,
        alpha=float(alpha),
        mode=mode,
        snr_opt=snr_opt,
    )


def _snr_opt(R0: np.ndarray, s: np.ndarray) -> float:
    eig = hermitian_eigen(R0)
    w = eig.basis.conj().T @ s
    return float(np.sum(np.abs(w) ** 2 / eig.eigenvalues))


def diagonal_model(
    lam: Sequence[float],
    t: Sequence[float],
    u: Sequence[complex],
    alpha: float,
    mode: Mode | str = Mode.SUPERVISED,
) -> CanonicalModel:
    """Build a canonical model directly from spectra (no rotation needed).

    ``snr_opt`` is recovered from ``||u||^2`` through the matrix inversion
    lemma when the training data contains the signal.
    """
    mode = Mode(mode)
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=complex)
    if np.any(lam <= 0) or np.any(t <= 0):
        raise ValueError("spectra must be positive")
    norm2 = float(np.sum(np.abs(u) ** 2))
    if mode.signal_in_training:
        if not norm2 < 1:
            raise ValueError("with signal-contaminated training ||u||^2 must be below 1")
        snr_opt = norm2 / (1.0 - norm2)
    else:
        snr_opt = norm2
    return CanonicalModel(lam=lam, t=t, u=u, alpha=float(alpha), mode=mode, snr_opt=snr_opt)

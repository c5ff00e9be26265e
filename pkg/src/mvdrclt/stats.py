"""Distribution utilities for comparing simulated samples with their
asymptotic laws."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc, betaln

_SQRT2 = math.sqrt(2.0)
_CF_EPS = 1e-16
_CF_MAX_ITER = 10_000
_TINY = 1e-300


def standardize(samples, center: float, sigma: float, N: int) -> np.ndarray:
    """``sqrt(N) (x - center) / sigma``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return math.sqrt(N) * (np.asarray(samples, dtype=float) - center) / sigma


def normal_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def ks_statistic(sorted_samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """One-sample Kolmogorov-Smirnov distance for already sorted samples."""
    x = np.asarray(sorted_samples, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("ks_statistic needs at least one sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _beta_cf(x: float, p: float, q: float) -> float:
    # Modified Lentz evaluation of the continued fraction for I_x(p, q).
    c = 1.0
    d = 1.0 - (p + q) * x / (p + 1.0)
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        for num in (
            m * (q - m) * x / ((p + m2 - 1.0) * (p + m2)),
            -(p + m) * (p + q + m) * x / ((p + m2) * (p + m2 + 1.0)),
        ):
            d = 1.0 + num * d
            d = 1.0 / (d if abs(d) > _TINY else _TINY)
            c = 1.0 + num / c
            c = c if abs(c) > _TINY else _TINY
            delta = c * d
            h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (x={x}, p={p}, q={q})")


def _beta_cdf_scalar(x: float, p: float, q: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = p * math.log(x) + q * math.log1p(-x) - betaln(p, q)
    if x < p / (p + q):
        return math.exp(log_front) * _beta_cf(x, p, q) / p
    return 1.0 - math.exp(log_front) * _beta_cf(1.0 - x, q, p) / q


def beta_cdf(x, p: float, q: float):
    """Regularized incomplete beta function ``I_x(p, q)``."""
    if not (p > 0 and q > 0):
        raise ValueError(f"beta parameters must be positive, got p={p}, q={q}")
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError("beta_cdf is defined on [0, 1]")
    out = np.array([_beta_cdf_scalar(float(v), p, q) for v in arr.ravel()]).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    underflow: int
    overflow: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def default_range(samples, k: float = 4.0) -> tuple[float, float]:
    x = np.asarray(samples, dtype=float)
    mu, sd = float(x.mean()), float(x.std(ddof=1)) if x.size > 1 else 0.0
    if sd == 0.0:
        sd = max(abs(mu), 1.0) * 1e-6
    return mu - k * sd, mu + k * sd


def histogram(samples, bins: int, range: tuple[float, float] | None = None) -> Histogram:
    """Uniform-width histogram; samples outside ``range`` go to under/overflow.

    The density is normalized over the in-range samples so that
    ``sum(density * width) == 1``.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    x = np.asarray(samples, dtype=float)
    lo, hi = default_range(x) if range is None else range
    if not hi > lo:
        raise ValueError(f"degenerate histogram range ({lo}, {hi})")
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    inside = int(counts.sum())
    width = (hi - lo) / bins
    density = counts / (inside * width) if inside else np.zeros(bins)
    return Histogram(edges, counts, density, int(np.sum(x < lo)), int(np.sum(x > hi)))


@dataclass(frozen=True)
class ValidationReport:
    mode: str
    n: int
    ks_normal: float
    ks_threshold: float
    empirical_mean: float
    empirical_var: float
    predicted_center: float
    predicted_sigma2: float
    variance_ratio: float
    variance_ratio_bounds: tuple[float, float]
    bounds_passed: bool
    # Diagnostics only; never part of the verdict.
    second_order_bias: float | None = None
    ks_normal_bias_corrected: float | None = None

    @property
    def ks_passed(self) -> bool:
        return self.ks_normal <= self.ks_threshold

    @property
    def variance_passed(self) -> bool:
        lo, hi = self.variance_ratio_bounds
        return lo <= self.variance_ratio <= hi

    @property
    def verdict(self) -> str:
        return "pass" if (self.ks_passed and self.variance_passed and self.bounds_passed) else "fail"

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(ks_passed=self.ks_passed, variance_passed=self.variance_passed, verdict=self.verdict)
        return out


def clt_report(samples, center: float, sigma2: float, N: int, mode: str, ks_threshold: float,
               variance_ratio_bounds: tuple[float, float] = (0.85, 1.15),
               bounds_passed: bool = True, bias: float | None = None) -> ValidationReport:
    """Compare samples with ``N(center, sigma2 / N)`` by KS and variance ratio.

    If ``bias`` is given, the KS distance after shifting the center by it is
    added as a diagnostic; the verdict always uses the unshifted center.
    """
    x = np.asarray(samples, dtype=float)
    z = np.sort(standardize(x, center, math.sqrt(sigma2), N))
    ks_shifted = None
    if bias is not None:
        ks_shifted = ks_statistic(np.sort(standardize(x, center + bias, math.sqrt(sigma2), N)), normal_cdf)
    var = float(x.var(ddof=1)) if x.size > 1 else 0.0
    return ValidationReport(
        mode=mode,
        n=int(x.size),
        ks_normal=ks_statistic(z, normal_cdf),
        ks_threshold=ks_threshold,
        empirical_mean=float(x.mean()),
        empirical_var=var,
        predicted_center=center,
        predicted_sigma2=sigma2,
        variance_ratio=N * var / sigma2,
        variance_ratio_bounds=tuple(variance_ratio_bounds),
        bounds_passed=bounds_passed,
        second_order_bias=bias,
        ks_normal_bias_corrected=ks_shifted,
    )

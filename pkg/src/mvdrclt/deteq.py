"""Deterministic equivalents of the loaded resolvent.

The pair ``(delta, delta_tilde)`` is the unique positive solution of

    delta_tilde = (1/N) sum_j t_j / (1 + delta t_j)
    delta       = (1/N) sum_i lam_i / (delta_tilde lam_i + alpha)

Everything downstream (E, E~, gamma, gamma~, trace powers) is a plain
function of that pair and of the two spectra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

RESIDUAL_TOL = 1e-13
MAX_ITERATIONS = 10_000


class FixedPointError(ArithmeticError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class FixedPoint:
    delta: float
    delta_tilde: float
    iterations: int
    residual: float


def _delta_tilde_of(delta: float, t: np.ndarray, N: int) -> tuple[float, float]:
    d = t / (1.0 + delta * t)
    return float(np.sum(d) / N), float(np.sum(d * d) / N)


def _delta_of(delta_tilde: float, lam: np.ndarray, alpha: float, N: int) -> tuple[float, float]:
    e = lam / (delta_tilde * lam + alpha)
    return float(np.sum(e) / N), float(np.sum(e * e) / N)


def fixed_point_residuals(delta, delta_tilde, lam, t, alpha, N) -> tuple[float, float]:
    """Relative residuals of the two equations at ``(delta, delta_tilde)``."""
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    rhs_tilde, _ = _delta_tilde_of(delta, t, N)
    rhs, _ = _delta_of(delta_tilde, lam, alpha, N)
    return abs(delta_tilde - rhs_tilde) / abs(delta_tilde), abs(delta - rhs) / abs(delta)


def solve_fixed_point(lam, t, alpha: float, N: int | None = None, tol: float = RESIDUAL_TOL,
                      max_iter: int = MAX_ITERATIONS) -> FixedPoint:
    """Solve the coupled system for ``(delta, delta_tilde)``.

    Eliminating ``delta_tilde`` leaves ``h(delta) = delta - g(f(delta)) = 0``
    with ``h' = 1 - gamma * gamma_tilde`` in (0, 1], so ``h`` is strictly
    increasing.  Newton steps are taken inside the bracket ``[0, mean(lam) c / alpha]``
    and replaced by bisection whenever they would leave it.

    Raises:
        ValueError: non-positive spectra or loading.
        FixedPointError: residual above ``tol`` after ``max_iter`` steps.
    """
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    if N is None:
        N = t.size
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if lam.size == 0 or t.size == 0 or np.any(lam <= 0) or np.any(t <= 0):
        raise ValueError("spectra must be non-empty and strictly positive")

    lo, hi = 0.0, float(np.sum(lam) / (N * alpha))
    delta = hi
    residual = math.inf
    for it in range(1, max_iter + 1):
        dt, gt = _delta_tilde_of(delta, t, N)
        g_val, g = _delta_of(dt, lam, alpha, N)
        h = delta - g_val
        if h > 0:
            hi = min(hi, delta)
        else:
            lo = max(lo, delta)
        residual = abs(h) / delta
        if residual <= tol * 1e-2:
            break
        step = h / (1.0 - g * gt)
        candidate = delta - step
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if candidate == delta or hi - lo <= 4 * np.finfo(float).eps * hi:
            break
        delta = candidate
    delta_tilde, _ = _delta_tilde_of(delta, t, N)
    r_tilde, r = fixed_point_residuals(delta, delta_tilde, lam, t, alpha, N)
    residual = max(r_tilde, r)
    if residual > tol:
        raise FixedPointError("fixed point did not converge", residual)
    return FixedPoint(delta, delta_tilde, it, residual)


@dataclass(frozen=True, eq=False)
class DetEq:
    delta: float
    delta_tilde: float
    e: np.ndarray
    e_tilde: np.ndarray
    N: int
    eta: dict[int, float] = field(repr=False)
    eta_tilde: dict[int, float] = field(repr=False)

    @property
    def M(self) -> int:
        return self.e.size

    @property
    def gamma(self) -> float:
        return self.eta[2]

    @property
    def gamma_tilde(self) -> float:
        return self.eta_tilde[2]

    @property
    def one_minus_gg(self) -> float:
        return 1.0 - self.gamma * self.gamma_tilde


def deterministic_equivalents(delta, delta_tilde, lam, t, alpha, N: int | None = None) -> DetEq:
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    if N is None:
        N = t.size
    e = lam / (delta_tilde * lam + alpha)
    e_tilde = t / (1.0 + delta * t)
    eta = {k: float(np.sum(e**k) / N) for k in range(1, 5)}
    eta_tilde = {k: float(np.sum(e_tilde**k) / N) for k in range(1, 5)}
    return DetEq(float(delta), float(delta_tilde), e, e_tilde, N, eta, eta_tilde)


def solve(lam, t, alpha: float) -> DetEq:
    """Convenience wrapper: solve the system and build every equivalent."""
    fp = solve_fixed_point(lam, t, alpha)
    return deterministic_equivalents(fp.delta, fp.delta_tilde, lam, t, alpha)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    value: float
    lower: float
    upper: float
    enforced: bool = True

    @property
    def passed(self) -> bool:
        return bool(self.lower <= self.value <= self.upper)


@dataclass(frozen=True)
class BoundReport:
    checks: tuple[BoundCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.enforced)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if c.enforced and not c.passed]

    def advisory_failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.enforced and not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "value": float(c.value),
                    "lower": float(c.lower),
                    "upper": float(c.upper),
                    "passed": c.passed,
                    "enforced": c.enforced,
                }
                for c in self.checks
            ],
        }


def check_bounds(deteq: DetEq, lam, t, alpha: float, M: int | None = None, N: int | None = None,
                 residual_tol: float = RESIDUAL_TOL) -> BoundReport:
    """Evaluate the uniform bounds on delta, delta~, gamma, gamma~ and 1 - gamma gamma~.

    Sup/inf norms are taken on the finite model: ``||R||_sup = max(lam)``,
    ``||R||_inf = min(lam)``, likewise for ``t``, and ``c_inf = c_sup = M/N``.

    The upper bound on ``1 - gamma gamma~`` is enforced in the form implied by
    the two gamma lower bounds, ``1 - (delta_inf^2 / c) delta_tilde_inf^2``.
    The tighter closed form ``1 - alpha R_inf T_inf / ((alpha + R T)(alpha + c R T))``
    is reported as a non-enforced check: it carries no factor of ``c`` and is
    violated when ``M/N`` is small (e.g. ``M=1, N=10``).
    """
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    M = lam.size if M is None else M
    N = t.size if N is None else N
    c = M / N
    r_sup, r_inf = float(lam.max()), float(lam.min())
    t_sup, t_inf = float(t.max()), float(t.min())
    d_inf = c * r_inf / (alpha + r_sup * t_sup)
    dt_inf = alpha * t_inf / (alpha + c * r_sup * t_sup)
    g, gt, omg = deteq.gamma, deteq.gamma_tilde, deteq.one_minus_gg
    r_tilde, r = fixed_point_residuals(deteq.delta, deteq.delta_tilde, lam, t, alpha, N)
    omg_upper = 1.0 - d_inf**2 * dt_inf**2 / c
    omg_upper_closed = 1.0 - alpha * r_inf * t_inf / ((alpha + r_sup * t_sup) * (alpha + c * r_sup * t_sup))
    omg_lower = alpha**2 * d_inf**2 / (c**2 * r_sup**2)
    checks = (
        BoundCheck("residual_delta_tilde", r_tilde, 0.0, residual_tol),
        BoundCheck("residual_delta", r, 0.0, residual_tol),
        BoundCheck("delta", deteq.delta, d_inf, c * r_sup / alpha),
        BoundCheck("delta_tilde", deteq.delta_tilde, dt_inf, t_sup),
        BoundCheck("gamma", g, d_inf**2 / c, c * r_sup**2 / alpha**2),
        BoundCheck("gamma_tilde", gt, dt_inf**2, t_sup**2),
        BoundCheck("one_minus_gg", omg, omg_lower, omg_upper),
        BoundCheck("one_minus_gg_open_unit", omg, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0)),
        BoundCheck("one_minus_gg_closed_form", omg, omg_lower, omg_upper_closed, enforced=False),
    )
    return BoundReport(checks)

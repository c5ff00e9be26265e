"""First- and second-order asymptotics of the realized SNR and MSE.

Two independent routes lead to each CLT variance: the closed forms built
from the V, S, T quantities, and the quadratic form ``[A B] Sigma [A B]^T``
of the joint (a, b) fluctuation matrix with the linearization coefficients.
Both are evaluated as written, without algebraic simplification.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .deteq import DetEq
from .model import CanonicalModel, Mode


class AsymptoticsError(ArithmeticError):
    """A quantity that must be positive came out non-positive."""


# MSE(w) = 1 - 2 Re(w^H s) + w^H R w = 1 - 2a + b, hence A = -2, B = 1.
MSE_COEFFS = (-2.0, 1.0)


@dataclass(frozen=True)
class SigmaMatrix:
    saa: float
    sab: float
    sbb: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.saa, self.sab], [self.sab, self.sbb]])

    @property
    def determinant(self) -> float:
        return self.saa * self.sbb - self.sab**2


@dataclass(frozen=True)
class CltCoefficients:
    A_s: float
    B_s: float
    A_u: float | None
    B_u: float | None


@dataclass(frozen=True)
class AsymptoticPrediction:
    abar: float
    bbar: float
    snr_bar_s: float
    snr_bar_u: float | None
    uEk: dict[int, float]
    S: float
    T_script: float
    V: float
    sigma_s2: float
    sigma_u2: float | None
    sigma_matrix: SigmaMatrix
    coeffs: CltCoefficients
    mse_bar: float
    sigma_mse2: float
    v_lower_bound: float

    def to_dict(self) -> dict:
        out = asdict(self)
        out["uEk"] = {str(k): v for k, v in self.uEk.items()}
        return out


def abar_bbar(u, deteq: DetEq) -> tuple[float, float, dict[int, float]]:
    w = np.abs(np.asarray(u)) ** 2
    if not np.sum(w) > 0:
        raise ValueError("u must be non-zero")
    uEk = {k: float(np.sum(deteq.e**k * w)) for k in range(1, 5)}
    return uEk[1], uEk[2] / deteq.one_minus_gg, uEk


def first_order_snr(abar: float, bbar: float) -> tuple[float, float]:
    """Supervised ``a^2/b`` and unsupervised ``(b/a^2 - 1)^-1`` predictions."""
    if not (abar > 0 and bbar > 0):
        raise ValueError("abar and bbar must be positive")
    if not bbar > abar**2:
        raise AsymptoticsError(f"bbar ({bbar:.6g}) must exceed abar^2 ({abar**2:.6g})")
    return abar**2 / bbar, 1.0 / (bbar / abar**2 - 1.0)


def variance_components(u, deteq: DetEq, uEk: dict[int, float]) -> tuple[float, float, float]:
    """Return ``(S, T_script, V)``; raises if ``V <= 0``."""
    U = uEk
    g, gt, omg = deteq.gamma, deteq.gamma_tilde, deteq.one_minus_gg
    eta, etat = deteq.eta, deteq.eta_tilde
    S = (U[2] / U[1]) ** 2 - 2 * U[3] / U[1] + 0.5 * (U[4] / U[2] + (U[3] / U[2]) ** 2)
    T = U[3] / U[2] - U[2] / U[1]
    V = (
        gt**2 * eta[4]
        + g**2 * etat[4]
        + 4 * gt * omg * S
        + 4 * (gt**2 * eta[3] - g * etat[3]) * T
        + 2 / omg * (gt**3 * eta[3] ** 2 - 2 * g * gt * eta[3] * etat[3] + g**3 * etat[3] ** 2)
    )
    if not V > 0:
        raise AsymptoticsError(f"V = {V:.6g} is not positive")
    return S, T, V


def v_lower_bound(deteq: DetEq, t) -> float:
    """``(eta_3 * (1/N) tr[T^-1 E~^3])^2 / ((1 - gamma gamma~) gamma)``."""
    t = np.asarray(t, dtype=float)
    tr = float(np.sum(deteq.e_tilde**3 / t) / deteq.N)
    return (deteq.eta[3] * tr) ** 2 / (deteq.one_minus_gg * deteq.gamma)


def theorem_variances(uEk: dict[int, float], deteq: DetEq, V: float) -> tuple[float, float | None]:
    """Closed-form CLT variances ``(sigma_s2, sigma_u2)``.

    ``sigma_u2`` is None when the base of its quartic factor is not positive,
    which happens exactly when ``bbar <= abar^2`` (possible for supervised
    training with ``||u||^2 > 1``).
    """
    if not V > 0:
        raise AsymptoticsError("V must be positive")
    ratio = uEk[1] ** 2 / uEk[2]
    sigma_s2 = ratio**2 * V
    base = 1.0 - ratio * deteq.one_minus_gg
    if not base > 0:
        return sigma_s2, None
    return sigma_s2, sigma_s2 * base**-4


def sigma_matrix(u, deteq: DetEq, uEk: dict[int, float]) -> SigmaMatrix:
    U = uEk
    g, gt, omg = deteq.gamma, deteq.gamma_tilde, deteq.one_minus_gg
    eta, etat = deteq.eta, deteq.eta_tilde
    mixed3 = gt**2 * eta[3] - g * etat[3]
    saa = gt / omg * U[2] ** 2
    sab = 2 * gt / omg**2 * U[2] * U[3] + U[2] ** 2 / omg**3 * mixed3
    sbb = (
        2 * gt / omg**3 * U[4] * U[2]
        + 2 * gt / omg**3 * U[3] ** 2
        + 4 * U[3] * U[2] / omg**4 * mixed3
        + U[2] ** 2 / omg**4 * (gt**2 * eta[4] + g**2 * etat[4])
        + 2 * U[2] ** 2 / omg**5 * (gt**3 * eta[3] ** 2 - 2 * g * gt * eta[3] * etat[3] + g**3 * etat[3] ** 2)
    )
    out = SigmaMatrix(saa, sab, sbb)
    if not (saa > 0 and out.determinant > 0):
        raise AsymptoticsError(f"Sigma is not positive definite: {out}")
    return out


def clt_coefficients(abar: float, bbar: float) -> CltCoefficients:
    if not (abar > 0 and bbar > 0):
        raise ValueError("abar and bbar must be positive")
    A_s = 2 * abar / bbar
    B_s = -((abar / bbar) ** 2)
    gap = bbar - abar**2
    if not gap > 0:
        return CltCoefficients(A_s, B_s, None, None)
    return CltCoefficients(A_s, B_s, 2 * abar * bbar / gap**2, -((abar / gap) ** 2))


def quadratic_form_variance(A: float, B: float, sigma: SigmaMatrix) -> float:
    return A * A * sigma.saa + 2 * A * B * sigma.sab + B * B * sigma.sbb


def second_order_bias(abar: float, bbar: float, sigma: SigmaMatrix, N: int, mode) -> float:
    """Delta-method mean shift ``tr(H Sigma) / (2N)`` of the realized SNR.

    The CLT centers on the first-order limit, so this ``O(1/N)`` term is
    invisible to the theory but shifts the standardized statistic by
    ``O(N^-1/2)``.  It is reported as a diagnostic only.
    """
    mode = Mode(mode)
    a, b = abar, bbar
    if mode is Mode.MSE:
        return 0.0
    if mode is Mode.SUPERVISED:
        h_aa, h_ab, h_bb = 2 / b, -2 * a / b**2, 2 * a * a / b**3
    else:
        g = b - a * a
        if not g > 0:
            raise AsymptoticsError("unsupervised SNR limit undefined (bbar <= abar^2)")
        h_aa = 2 * b / g**2 + 8 * a * a * b / g**3
        h_ab = 2 * a / g**2 - 4 * a * b / g**3
        h_bb = 2 * a * a / g**3
    return (h_aa * sigma.saa + 2 * h_ab * sigma.sab + h_bb * sigma.sbb) / (2 * N)


def mse_prediction(abar: float, bbar: float, sigma: SigmaMatrix) -> tuple[float, float]:
    A, B = MSE_COEFFS
    return 1.0 - 2.0 * abar + bbar, quadratic_form_variance(A, B, sigma)


def predict(model: CanonicalModel, deteq: DetEq) -> AsymptoticPrediction:
    abar, bbar, uEk = abar_bbar(model.u, deteq)
    if bbar > abar**2:
        snr_s, snr_u = first_order_snr(abar, bbar)
    else:
        snr_s, snr_u = abar**2 / bbar, None
    S, T, V = variance_components(model.u, deteq, uEk)
    sigma_s2, sigma_u2 = theorem_variances(uEk, deteq, V)
    sig = sigma_matrix(model.u, deteq, uEk)
    mse_bar, sigma_mse2 = mse_prediction(abar, bbar, sig)
    return AsymptoticPrediction(
        abar=abar,
        bbar=bbar,
        snr_bar_s=snr_s,
        snr_bar_u=snr_u,
        uEk=uEk,
        S=S,
        T_script=T,
        V=V,
        sigma_s2=sigma_s2,
        sigma_u2=sigma_u2,
        sigma_matrix=sig,
        coeffs=clt_coefficients(abar, bbar),
        mse_bar=mse_bar,
        sigma_mse2=sigma_mse2,
        v_lower_bound=v_lower_bound(deteq, model.t),
    )

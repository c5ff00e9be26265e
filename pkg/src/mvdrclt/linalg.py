"""Dense complex linear algebra used by scenario canonicalization and the
Monte Carlo engine.

Eigendecomposition is a cyclic Jacobi method with round-robin ordering, so
that every sweep applies ``n // 2`` disjoint rotations at once.  Solves with
Hermitian positive definite matrices go through a Cholesky factorization that
accepts a leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_RTOL = 1e-12
JACOBI_TOL = 1e-13
MAX_SWEEPS = 100


class LinAlgError(ValueError):
    """Raised for malformed inputs or failed factorizations."""


class NotPositiveDefiniteError(LinAlgError):
    def __init__(self, pivot: int, value: float):
        super().__init__(f"matrix is not positive definite (pivot {pivot} = {value:.3e})")
        self.pivot = pivot
        self.value = value


class JacobiConvergenceError(LinAlgError):
    def __init__(self, residual: float, sweeps: int):
        super().__init__(f"Jacobi did not converge after {sweeps} sweeps (off-diagonal norm {residual:.3e})")
        self.residual = residual
        self.sweeps = sweeps


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # real, ascending
    basis: np.ndarray  # unitary, columns are eigenvectors

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.conj().T


def _as_square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise LinAlgError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] < 1:
        raise LinAlgError("matrix dimension must be at least 1")
    return A


def check_hermitian(A, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Return ``A`` as a complex array after checking it is Hermitian."""
    A = _as_square(A).astype(complex)
    scale = np.max(np.abs(A))
    asym = np.max(np.abs(A - A.conj().T))
    if asym > rtol * max(scale, np.finfo(float).tiny):
        raise LinAlgError(f"matrix is not Hermitian (max |A - A^H| = {asym:.3e}, max |A| = {scale:.3e})")
    return A


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # Circle-method tournament; index n stands for a bye when n is odd.
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def hermitian_eigen(A, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Args:
        A: Hermitian matrix, ``max|A - A^H| <= 1e-12 * max|A|``.
        tol: sweeps stop once the off-diagonal Frobenius norm falls below
            ``tol * ||A||_F``.
        max_sweeps: hard cap on the number of sweeps.

    Returns:
        EigenDecomposition with ascending eigenvalues and a unitary basis.

    Raises:
        LinAlgError: non-square or non-Hermitian input.
        JacobiConvergenceError: the sweep cap was hit.
    """
    A = check_hermitian(A)
    A = 0.5 * (A + A.conj().T)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    total = np.linalg.norm(A)
    if n == 1 or total == 0.0:
        return EigenDecomposition(np.real(np.diag(A)).copy(), V)
    rounds = _round_robin(n)
    threshold = tol * total

    mask = ~np.eye(n, dtype=bool)

    def off_norm(B):
        return np.linalg.norm(B[mask])

    off = off_norm(A)
    sweeps = 0
    while off > threshold:
        if sweeps >= max_sweeps:
            raise JacobiConvergenceError(off, sweeps)
        for P, Q in rounds:
            b = A[P, Q]
            mag = np.abs(b)
            # Negligible couplings are dropped rather than rotated.
            negligible = mag <= 1e-18 * (np.abs(A[P, P]) + np.abs(A[Q, Q]))
            A[P[negligible], Q[negligible]] = 0.0
            A[Q[negligible], P[negligible]] = 0.0
            active = ~negligible
            if not np.any(active):
                continue
            P, Q, b, mag = P[active], Q[active], b[active], mag[active]
            app = A[P, P].real
            aqq = A[Q, Q].real
            phase = b / mag
            tau = (aqq - app) / (2.0 * mag)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] diagonalizes the 2x2 block.
            gpp, gpq = c, s
            gqp, gqq = -s * phase.conj(), c * phase.conj()
            colP, colQ = A[:, P].copy(), A[:, Q].copy()
            A[:, P] = colP * gpp + colQ * gqp
            A[:, Q] = colP * gpq + colQ * gqq
            rowP, rowQ = A[P, :].copy(), A[Q, :].copy()
            A[P, :] = np.conj(gpp)[:, None] * rowP + np.conj(gqp)[:, None] * rowQ
            A[Q, :] = np.conj(gpq)[:, None] * rowP + np.conj(gqq)[:, None] * rowQ
            A[P, Q] = 0.0
            A[Q, P] = 0.0
            vP, vQ = V[:, P].copy(), V[:, Q].copy()
            V[:, P] = vP * gpp + vQ * gqp
            V[:, Q] = vP * gpq + vQ * gqq
        sweeps += 1
        off = off_norm(A)
    w = np.real(np.diag(A))
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], V[:, order])


def cholesky(A) -> np.ndarray:
    """Lower Cholesky factor of one HPD matrix or a stack of them (``(..., n, n)``)."""
    A = np.asarray(A, dtype=complex)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise LinAlgError(f"expected square matrices, got shape {A.shape}")
    n = A.shape[-1]
    L = np.zeros_like(A)
    for j in range(n):
        row = L[..., j, :j]
        d = A[..., j, j].real - np.sum(np.abs(row) ** 2, axis=-1)
        if np.any(~(d > 0)):
            raise NotPositiveDefiniteError(j, float(np.min(d)))
        ljj = np.sqrt(d)
        L[..., j, j] = ljj
        if j + 1 < n:
            col = A[..., j + 1 :, j] - np.einsum("...ik,...k->...i", L[..., j + 1 :, :j], row.conj())
            L[..., j + 1 :, j] = col / ljj[..., None]
    return L


def cholesky_solve(L, B) -> np.ndarray:
    """Solve ``(L L^H) X = B`` by forward and back substitution.

    ``B`` is a vector (``(..., n)``) when its ndim matches ``L.ndim - 1``,
    otherwise a matrix of right-hand sides (``(..., n, k)``).
    """
    L = np.asarray(L)
    B = np.asarray(B, dtype=complex)
    vector = B.ndim == L.ndim - 1
    if vector:
        B = B[..., None]
    n = L.shape[-1]
    if B.shape[-2] != n:
        raise LinAlgError(f"shape mismatch: factor is {n}x{n}, right-hand side has {B.shape[-2]} rows")
    Y = np.empty(np.broadcast_shapes(L.shape[:-2], B.shape[:-2]) + B.shape[-2:], dtype=complex)
    for i in range(n):
        acc = B[..., i, :] - np.einsum("...k,...kj->...j", L[..., i, :i], Y[..., :i, :])
        Y[..., i, :] = acc / L[..., i, i, None]
    X = np.empty_like(Y)
    for i in range(n - 1, -1, -1):
        acc = Y[..., i, :] - np.einsum("...k,...kj->...j", L[..., i + 1 :, i].conj(), X[..., i + 1 :, :])
        X[..., i, :] = acc / L[..., i, i, None].real
    return X[..., 0] if vector else X


def hpd_solve(A, B) -> np.ndarray:
    """Solve ``A X = B`` for Hermitian positive definite ``A``.

    Raises:
        NotPositiveDefiniteError: a Cholesky pivot was not positive.
    """
    A = _as_square(A)
    return cholesky_solve(cholesky(A), B)


def quad_form(v, A) -> float:
    """Real value of ``v^H A v`` for Hermitian ``A``."""
    v = np.asarray(v)
    A = np.asarray(A)
    if v.ndim != 1 or A.shape != (v.size, v.size):
        raise LinAlgError(f"dimension mismatch: vector {v.shape}, matrix {A.shape}")
    value = np.vdot(v, A @ v)
    if abs(value.imag) > 1e-10 * max(abs(value.real), np.finfo(float).tiny):
        raise LinAlgError(f"quadratic form has imaginary part {value.imag:.3e}; matrix not Hermitian?")
    return float(value.real)

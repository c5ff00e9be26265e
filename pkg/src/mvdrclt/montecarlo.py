"""Reproducible Monte Carlo of the realized quadratic forms ``a = u^H Q u``
and ``b = u^H Q^2 u`` with ``Q = (X diag(t) X^H / N + alpha diag(lam)^-1)^-1``.

Replication ``r`` of a run seeded with ``seed`` always draws from the same
Philox sub-stream, so results do not depend on how replications are spread
over workers.  Replications are processed in fixed blocks aligned on the
replication index for the same reason.
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .linalg import LinAlgError, cholesky, cholesky_solve
from .model import CanonicalModel, Mode, canonicalize_matrices

log = logging.getLogger(__name__)

BLOCK = 256
_SEED_MASK = (1 << 64) - 1


class MonteCarloError(RuntimeError):
    def __init__(self, message: str, reps: list[int]):
        shown = ", ".join(map(str, reps[:10])) + (" ..." if len(reps) > 10 else "")
        super().__init__(f"{message} (replications: {shown})")
        self.reps = reps


def stream(seed: int, rep: int) -> np.random.Generator:
    """Independent counter-based generator for replication ``rep``."""
    seq = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=(int(rep),))
    return np.random.Generator(np.random.Philox(seq))


def _uniform_open(raw: np.ndarray) -> np.ndarray:
    # Top 53 bits, shifted by half an ulp so 0 and 1 are never produced.
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _gaussian_from_raw(raw: np.ndarray, M: int, N: int) -> np.ndarray:
    z = ndtri(_uniform_open(raw))
    n = M * N
    return (z[..., :n] + 1j * z[..., n:]).reshape(raw.shape[:-1] + (M, N)) / np.sqrt(2.0)


def sample_gaussian_matrix(gen: np.random.Generator, M: int, N: int) -> np.ndarray:
    """Standard circular complex Gaussian ``M x N`` matrix (``E|X_ij|^2 = 1``).

    Normals come from the inverse normal CDF applied to uniform draws, so each
    matrix consumes exactly ``2 M N`` raw 64-bit words.
    """
    return _gaussian_from_raw(gen.bit_generator.random_raw(2 * M * N), M, N)


def _draw_block(seed: int, reps: range, M: int, N: int) -> np.ndarray:
    raw = np.stack([stream(seed, r).bit_generator.random_raw(2 * M * N) for r in reps])
    return _gaussian_from_raw(raw, M, N)


def _loaded_gram(X: np.ndarray, t: np.ndarray, diag: np.ndarray) -> np.ndarray:
    N = X.shape[-1]
    G = (X * t) @ np.swapaxes(X, -1, -2).conj() / N
    idx = np.arange(diag.size)
    G[..., idx, idx] += diag
    return G


def _ab_from_gram(G: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = cholesky_solve(cholesky(G), np.broadcast_to(u, G.shape[:-1]))
    a = np.real(np.sum(u.conj() * x, axis=-1))
    b = np.sum(np.abs(x) ** 2, axis=-1)
    return a, b


def realized_ab(X: np.ndarray, model: CanonicalModel) -> tuple[float, float]:
    """Realized ``(a, b)`` for one data matrix (or a stack, returning arrays).

    ``b = ||Q u||^2`` reuses the single solve ``Q u`` since ``Q`` is Hermitian.
    """
    X = np.asarray(X)
    if X.shape[-2:] != (model.M, model.N):
        raise ValueError(f"X must be {model.M}x{model.N}, got {X.shape[-2:]}")
    G = _loaded_gram(X, model.t, model.alpha / model.lam)
    a, b = _ab_from_gram(G, model.u)
    if X.ndim == 2:
        return float(a), float(b)
    return a, b


def realized_snr(a, b, mode: Mode | str):
    """Realized SNR of the loaded MVDR filter from ``(a, b)``.

    Supervised: ``a^2 / b``.  Signal-contaminated training: ``(b / a^2 - 1)^-1``,
    which requires ``b > a^2``.
    """
    mode = Mode(mode)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("a and b must be positive")
    if mode is Mode.SUPERVISED:
        out = a * a / b
    else:
        if np.any(b <= a * a):
            raise ValueError("unsupervised SNR requires b > a^2")
        out = 1.0 / (b / (a * a) - 1.0)
    return float(out) if out.ndim == 0 else out


def realized_mse(a, b):
    out = 1.0 - 2.0 * np.asarray(a, dtype=float) + np.asarray(b, dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class McConfig:
    model: CanonicalModel
    reps: int
    seed: int
    workers: int = 1  # 0 selects os.cpu_count()

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.workers < 0:
            raise ValueError("workers must be non-negative")


@dataclass(frozen=True, eq=False)
class McSamples:
    a: np.ndarray
    b: np.ndarray
    snr: np.ndarray
    mse: np.ndarray
    mode: Mode
    seed: int
    reps: int

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)


def _check_invariants(a: np.ndarray, b: np.ndarray, model: CanonicalModel) -> None:
    bad = np.flatnonzero(~((a > 0) & (b > 0)))
    if bad.size:
        raise MonteCarloError("non-positive a or b", bad.tolist())
    a_max = float(np.sum(model.u_weights)) * float(model.lam.max()) / model.alpha
    bad = np.flatnonzero(a > a_max * (1 + 1e-12))
    if bad.size:
        raise MonteCarloError(f"a exceeds ||u||^2 max(lam) / alpha = {a_max:.6g}", bad.tolist())
    if model.mode.signal_in_training:
        bad = np.flatnonzero(~(b > a * a))
        if bad.size:
            raise MonteCarloError("b <= a^2", bad.tolist())


def _run_block(model: CanonicalModel, seed: int, reps: range) -> tuple[np.ndarray, np.ndarray]:
    X = _draw_block(seed, reps, model.M, model.N)
    try:
        return realized_ab(X, model)
    except LinAlgError as exc:
        raise MonteCarloError(f"factorization failed: {exc}", list(reps)) from exc


def _blocks(reps: int) -> list[range]:
    return [range(k, min(k + BLOCK, reps)) for k in range(0, reps, BLOCK)]


def run_experiment(config: McConfig) -> McSamples:
    model = config.model
    blocks = _blocks(config.reps)
    workers = config.workers or os.cpu_count() or 1
    workers = min(workers, len(blocks))
    log.info("simulating %d replications (M=%d, N=%d, %s) on %d worker(s)",
             config.reps, model.M, model.N, model.mode.value, workers)
    if workers == 1:
        parts = [_run_block(model, config.seed, blk) for blk in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda blk: _run_block(model, config.seed, blk), blocks))
    a = np.concatenate([p[0] for p in parts])
    b = np.concatenate([p[1] for p in parts])
    _check_invariants(a, b, model)
    snr_mode = Mode.UNSUPERVISED if model.mode.signal_in_training else Mode.SUPERVISED
    return McSamples(
        a=a,
        b=b,
        snr=realized_snr(a, b, snr_mode),
        mse=realized_mse(a, b),
        mode=model.mode,
        seed=config.seed,
        reps=config.reps,
    )


def beta_oracle_run(M: int, N: int, R0, s, reps: int, seed: int) -> np.ndarray:
    """Normalized SNR ``SNR / SNR_opt`` of the unloaded SCM with white snapshots.

    Bypasses the ``alpha > 0`` restriction on purpose: with ``T = I`` and
    ``alpha = 0`` the samples follow ``Beta(N + 2 - M, M - 1)`` exactly.
    """
    if M < 2:
        raise ValueError("the Beta law needs M >= 2")
    if N < M + 1:
        raise ValueError(f"need N >= M + 1 for an invertible SCM, got M={M}, N={N}")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    model = canonicalize_matrices(R0, s, np.eye(N), 0.0, Mode.SUPERVISED)
    out = []
    for blk in _blocks(reps):
        X = _draw_block(seed, blk, M, N)
        try:
            a, b = _ab_from_gram(_loaded_gram(X, np.ones(N), np.zeros(M)), model.u)
        except LinAlgError as exc:
            raise MonteCarloError(f"singular sample covariance: {exc}", list(blk)) from exc
        out.append(a * a / (b * model.snr_opt))
    return np.concatenate(out)


def write_samples_csv(samples: McSamples, path: str | Path, include_mse: bool | None = None) -> None:
    if include_mse is None:
        include_mse = samples.mode is Mode.MSE
    header = ["rep", "a", "b", "snr"] + (["mse"] if include_mse else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in range(samples.reps):
            row = [r, samples.a[r], samples.b[r], samples.snr[r]]
            if include_mse:
                row.append(samples.mse[r])
            writer.writerow([row[0]] + [f"{v:.17g}" for v in row[1:]])


def read_samples_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        fields = reader.fieldnames or []
    if not rows:
        raise ValueError(f"{path}: no samples")
    return {name: np.array([float(r[name]) for r in rows]) for name in fields}

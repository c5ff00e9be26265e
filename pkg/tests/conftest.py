import math

import numpy as np
import pytest

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def random_hermitian(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (A + A.conj().T) / 2


def random_hpd(rng, n):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A @ A.conj().T / n + 0.1 * np.eye(n)


def random_spectra(rng, max_dim=64):
    """Random diagonal model: (lam, t, u, alpha)."""
    M = int(rng.integers(1, max_dim + 1))
    N = int(rng.integers(1, max_dim + 1))
    lam = np.exp(rng.uniform(np.log(0.1), np.log(10.0), M))
    t = np.exp(rng.uniform(np.log(0.1), np.log(10.0), N))
    alpha = float(np.exp(rng.uniform(np.log(0.01), np.log(10.0))))
    u = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return lam, t, u, alpha


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def golden():
    return GOLDEN


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

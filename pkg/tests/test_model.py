import math

import numpy as np
import pytest

from mvdrclt.model import (
    ExplicitSpatial,
    Mode,
    Scenario,
    TemporalSpec,
    UlaSpatial,
    build_spatial,
    build_temporal,
    canonicalize,
    canonicalize_matrices,
    diagonal_model,
    ula_steering,
)

from conftest import random_hpd

REFERENCE_INTERFERERS = (-20.0, 50.0, 55.0)


def test_steering_broadside():
    np.testing.assert_allclose(ula_steering(0.0, 4), [0.5, 0.5, 0.5, 0.5])


def test_steering_single_element():
    np.testing.assert_allclose(ula_steering(37.0, 1), [1.0])


def test_steering_30_degrees():
    v = ula_steering(30.0, 8)
    assert abs(np.linalg.norm(v) - 1) < 1e-14
    assert abs(v[1] / v[0] - np.exp(1j * np.pi * 0.5)) < 1e-14


def test_steering_rejects_empty():
    with pytest.raises(ValueError):
        ula_steering(0.0, 0)


def test_noise_only_spatial():
    R0, s = build_spatial(UlaSpatial(), 5)
    np.testing.assert_allclose(R0, np.eye(5))
    assert abs(np.linalg.norm(s) - 1) < 1e-15


def test_one_interferer_spectrum():
    R0, _ = build_spatial(UlaSpatial(interferer_angles_deg=(25.0,), interferer_power=4.0), 6)
    np.testing.assert_allclose(np.linalg.eigvalsh(R0), [1, 1, 1, 1, 1, 5.0], atol=1e-12)


def test_ula_interference_scenario():
    R0, s = build_spatial(UlaSpatial(interferer_angles_deg=REFERENCE_INTERFERERS, interferer_power=10.0), 20)
    expected = np.eye(20, dtype=complex)
    for ang in REFERENCE_INTERFERERS:
        a = np.exp(1j * np.pi * np.arange(20) * math.sin(math.radians(ang))) / math.sqrt(20)
        expected += 10.0 * np.outer(a, a.conj())
    np.testing.assert_allclose(R0, expected, atol=1e-13)
    eig = np.linalg.eigvalsh(R0)
    assert np.sum(eig > 1 + 1e-9) == 3


def test_ula_validation():
    with pytest.raises(ValueError):
        UlaSpatial(noise_power=0.0)
    with pytest.raises(ValueError):
        UlaSpatial(interferer_power=-1.0)


def test_explicit_spatial_checks(rng):
    R0 = random_hpd(rng, 3)
    s = np.array([1.0, 0.0, 0.0])
    R, v = build_spatial(ExplicitSpatial(R0, s), 3)
    np.testing.assert_allclose(R, R0)
    with pytest.raises(ValueError, match="unit norm"):
        build_spatial(ExplicitSpatial(R0, 2 * s), 3)
    with pytest.raises(ValueError, match="positive definite"):
        build_spatial(ExplicitSpatial(np.diag([1.0, -1.0, 1.0]), s), 3)
    with pytest.raises(ValueError):
        build_spatial(ExplicitSpatial(R0, s), 4)


def test_temporal_identity():
    np.testing.assert_array_equal(build_temporal(TemporalSpec("identity"), 3), np.eye(3))


def test_temporal_exp_toeplitz():
    e = math.exp(-1.0)
    np.testing.assert_allclose(build_temporal(TemporalSpec("exp_toeplitz"), 2), [[1, e], [e, 1]])
    T = build_temporal(TemporalSpec("exp_toeplitz"), 5)
    assert T[0, 3] == pytest.approx(math.exp(-3.0))


def test_temporal_ar1():
    np.testing.assert_allclose(build_temporal(TemporalSpec("ar1", 0.5), 2), [[4 / 3, 2 / 3], [2 / 3, 4 / 3]])


def test_temporal_ar1_requires_stable_psi():
    with pytest.raises(ValueError):
        TemporalSpec("ar1", 1.0)
    with pytest.raises(ValueError):
        TemporalSpec("fractal")


def test_scenario_rejects_nonpositive_alpha():
    with pytest.raises(ValueError):
        Scenario(M=2, N=4, alpha=0.0)


def test_canonical_identity_supervised():
    m = canonicalize(Scenario(M=4, N=6, alpha=1.0))
    np.testing.assert_allclose(m.lam, 1.0)
    np.testing.assert_allclose(m.t, 1.0)
    assert np.sum(m.u_weights) == pytest.approx(1.0, abs=1e-14)
    assert m.snr_opt == pytest.approx(1.0, abs=1e-14)
    assert m.c == pytest.approx(4 / 6)


def test_canonical_scaled_noise():
    m = canonicalize(Scenario(M=3, N=3, alpha=1.0, spatial=UlaSpatial(noise_power=2.0)))
    assert np.sum(m.u_weights) == pytest.approx(0.5, abs=1e-14)
    assert m.snr_opt == pytest.approx(0.5, abs=1e-14)


def test_canonical_identity_unsupervised():
    m = canonicalize(Scenario(M=5, N=8, alpha=1.0, mode=Mode.UNSUPERVISED))
    np.testing.assert_allclose(m.lam, [1, 1, 1, 1, 2], atol=1e-13)
    assert np.sum(m.u_weights) == pytest.approx(0.5, abs=1e-13)
    assert m.snr_opt == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("mode", list(Mode))
def test_snr_opt_rotation_invariant(rng, mode):
    for _ in range(10):
        M = int(rng.integers(2, 12))
        R0 = random_hpd(rng, M)
        s = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        s /= np.linalg.norm(s)
        m = canonicalize_matrices(R0, s, np.eye(3), 0.5, mode)
        direct = float(np.real(s.conj() @ np.linalg.solve(R0, s)))
        assert m.snr_opt == pytest.approx(direct, rel=1e-10)
        norm_u = float(np.sum(m.u_weights))
        if mode is Mode.SUPERVISED:
            assert norm_u == pytest.approx(m.snr_opt, rel=1e-10)
        else:
            assert norm_u == pytest.approx(m.snr_opt / (1 + m.snr_opt), rel=1e-10)
        assert np.all(m.lam > 0) and np.all(m.t > 0)


def test_temporal_eigenvalues_ula_scenario():
    m = canonicalize(Scenario(M=4, N=40, alpha=0.1, temporal=TemporalSpec("exp_toeplitz")))
    np.testing.assert_allclose(np.sort(m.t), np.linalg.eigvalsh(build_temporal(TemporalSpec("exp_toeplitz"), 40)),
                               atol=1e-12)


def test_diagonal_model_modes():
    sup = diagonal_model([1.0, 2.0], [1.0], [0.5, 0.5], 1.0)
    assert sup.snr_opt == pytest.approx(0.5)
    uns = diagonal_model([1.0, 2.0], [1.0], [0.5, 0.5], 1.0, "unsupervised")
    assert uns.snr_opt == pytest.approx(0.5 / 0.5)
    with pytest.raises(ValueError):
        diagonal_model([1.0], [1.0], [1.0], 1.0, "unsupervised")

from fractions import Fraction

import numpy as np
import pytest

from fvsupra.systems import (
    DecompositionError,
    HyperbolicSystem,
    linearized_euler,
    transport,
)


def test_transport_scalar_decomposition():
    sys = transport((Fraction(3, 2),))
    s, lam, sinv = sys.flux_jacobian_decomposition((2.0,))
    assert lam.shape == (1,)
    assert abs(lam[0] - 3.0) < 1e-14
    pp, pm = sys.upwind_split((2.0,))
    assert abs(pp[0, 0] - 3.0) < 1e-14 and abs(pm[0, 0]) < 1e-14


def test_transport_exact_split():
    sys = transport((Fraction(1), Fraction(-2)))
    pp, pm = sys.upwind_split((Fraction(1, 3), Fraction(1, 3)), exact=True)
    an = Fraction(1, 3) - Fraction(2, 3)
    assert pp[0][0] == (an + abs(an)) / 2 == 0
    assert pm[0][0] == an


def test_lee_matrix_rows_match_display():
    sys = linearized_euler((0.7, -0.2))
    ax, ay = sys.mats
    assert np.allclose(ax[0], [0.7, 1, 0, 0])
    assert np.allclose(ax[1], [0, 0.7, 0, 1])
    assert np.allclose(ax[2], [0, 0, 0.7, 0])
    assert np.allclose(ax[3], [0, 1, 0, 0.7])
    assert np.allclose(ay[3], [0, 0, 1, -0.2])
    assert np.allclose(ay[1], [0, -0.2, 0, 0])


def test_lee_eigenvalues_at_rest():
    sys = linearized_euler((0.0, 0.0))
    _s, lam, _si = sys.flux_jacobian_decomposition((1.0, 0.0))
    assert np.allclose(sorted(lam), [-1.0, 0.0, 0.0, 1.0], atol=1e-14)


def test_abs_of_diagonal_eigenvalues():
    # |Lambda| = diag(2,3) for Lambda = diag(-2,3)
    sys = HyperbolicSystem(1, [np.diag([-2.0, 3.0])], name="diag")
    aa = sys.abs_direction_matrix((1.0,))
    assert np.allclose(aa, np.diag([2.0, 3.0]), atol=1e-14)


def test_lee_analytic_abs_matches_schur_oracle():
    from scipy.linalg import funm

    rng = np.random.default_rng(4)
    for _ in range(20):
        sys = linearized_euler(rng.uniform(-0.8, 0.8, size=2))
        nvec = rng.uniform(-1, 1, size=2)
        if np.hypot(*nvec) < 0.1:
            continue
        analytic = sys.abs_direction_matrix(tuple(nvec))
        oracle = funm(sys.direction_matrix(tuple(nvec)), np.abs)
        assert np.abs(analytic - np.real(oracle)).max() < 1e-9
        s, lam, sinv = sys.flux_jacobian_decomposition(tuple(nvec))
        assert np.abs(s @ np.diag(np.abs(lam)) @ sinv - analytic).max() < 1e-12


def test_reconstruction_identity():
    sys = linearized_euler((0.3, 0.1))
    nvec = (0.6, -0.8)
    s, lam, sinv = sys.flux_jacobian_decomposition(nvec)
    a = sys.direction_matrix(nvec)
    assert np.abs(s @ np.diag(lam) @ sinv - a).max() <= 1e-12 * np.abs(a).max()


def test_complex_spectrum_rejected():
    rot = [[0.0, -1.0], [1.0, 0.0]]
    with pytest.raises(DecompositionError, match="direction"):
        HyperbolicSystem(1, [rot], name="rotation")


def test_wave_speed_and_norm():
    sys = transport((3.0, 4.0))
    assert abs(sys.max_wave_speed() - 5.0) < 1e-6
    assert abs(sys.op_norm() - 5.0) < 1e-6
    lee = linearized_euler((0.4, 0.0))
    assert abs(lee.max_wave_speed() - 1.4) < 1e-6

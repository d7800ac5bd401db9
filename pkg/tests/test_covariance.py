import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import expm

from ofbm import covariance
from ofbm.errors import LowAccuracy, ToleranceNotMet
from ofbm.model import ExponentSpec, OfbmModel
from ofbm.quadrature import QuadratureConfig
from ofbm.verify import c2_squared


def quad_cov(m, s, t, cut=1.0):
    """E X(s) X(t)^T by scipy QUADPACK with Fourier weights, x^-D by expm."""
    D = m.exponent.D
    K = m.re_aa + 1j * m.im_aa

    def Kx(x):
        P = expm(-math.log(x) * D)
        return P @ K @ P.T

    terms = [(s - t, 1.0), (s, -1.0), (-t, -1.0)]
    out = np.zeros((m.n, m.n))
    for i in range(m.n):
        for j in range(m.n):
            def near(x):
                z = np.expm1(1j * s * x) * np.expm1(-1j * t * x)
                return 2 * (z * Kx(x)[i, j]).real / x**2

            def re(x):
                return Kx(x)[i, j].real / x**2

            def im(x):
                return Kx(x)[i, j].imag / x**2

            out[i, j] = quad(near, 0, cut, limit=200, epsabs=0, epsrel=1e-11)[0]
            out[i, j] += 2 * quad(re, cut, np.inf, epsabs=1e-13)[0]
            # 2 Re[c e^{iwx} K] = 2c (cos(wx) Re K - sin(wx) Im K) on [cut, inf)
            for w, c in terms:
                cos_part = quad(re, cut, np.inf, weight="cos", wvar=abs(w))[0]
                sin_part = quad(im, cut, np.inf, weight="sin", wvar=abs(w))[0]
                out[i, j] += 2 * c * (cos_part - np.sign(w) * sin_part)
    return out


@pytest.mark.parametrize("h", [0.3, 0.5, 0.7])
def test_fbm_variance_closed_form(fixtures, h):
    m = fixtures[f"fbm_h0{int(round(h * 100))}"]
    assert covariance.variance_profile(m, 1.0)[0, 0] == pytest.approx(c2_squared(h), rel=1e-9)


def test_fbm_half_gives_two_pi(fixtures):
    assert covariance.variance_profile(fixtures["fbm_h050"], 1.0)[0, 0] == pytest.approx(2 * math.pi, rel=1e-10)


@pytest.mark.parametrize("s,t", [(1.0, 2.0), (0.5, -0.7), (-1.0, -3.0)])
def test_fbm_covariance_structure(fixtures, s, t):
    h = 0.3
    m = fixtures["fbm_h030"]
    want = 0.5 * c2_squared(h) * (abs(s) ** (2 * h) + abs(t) ** (2 * h) - abs(t - s) ** (2 * h))
    assert covariance.cov(m, s, t, method="full")[0, 0] == pytest.approx(want, rel=1e-8)


def test_obm_covariance_is_two_pi_min_w_squared(fixtures):
    m = fixtures["obm_2d"]
    W2 = m.re_aa
    for s, t in ((1.0, 2.0), (0.3, 0.2)):
        c = covariance.cov(m, s, t, method="full")
        assert np.allclose(c, 2 * math.pi * min(s, t) * W2, rtol=1e-9)


def test_rotation_noise_variance(fixtures):
    for t in (0.5, 1.0, 3.0):
        V = covariance.variance_profile(fixtures["rotation_noise"], t)
        assert np.allclose(V, (4 + math.pi**2) * t * np.eye(2), rtol=1e-9)


@pytest.mark.parametrize("name", ["opposite_roots", "rank_deficient_a"])
def test_against_quadpack(fixtures, name):
    m = fixtures[name]
    for s, t in ((1.0, 2.0), (0.7, -0.4)):
        got = covariance.cov(m, s, t, method="full")
        want = quad_cov(m, s, t)
        assert np.allclose(got, want, rtol=1e-6, atol=1e-6 * np.abs(want).max())


def test_irreversible_antisymmetric_part_against_quadpack():
    ex = ExponentSpec.from_matrix(np.array([[0.7, 0.1], [-0.1, 0.7]]))
    m = OfbmModel.spectral_model(ex, [[1.0, 0.2], [0.0, 1.0]], [[0.0, 0.5], [-0.3, 0.2]])
    assert not m.flags["time_reversible"]
    got = covariance.cov(m, 1.0, 2.0)
    want = quad_cov(m, 1.0, 2.0)
    assert np.allclose(got, want, rtol=1e-6, atol=1e-6 * np.abs(want).max())
    assert not np.allclose(got, got.T, atol=1e-6)


def test_transpose_symmetry(fixtures):
    m = fixtures["rotation_noise"]
    assert np.allclose(covariance.cov(m, 1.0, 2.0), covariance.cov(m, 2.0, 1.0).T, atol=1e-12)


def test_auto_matches_full(fixtures):
    for name in ("jordan_half", "opposite_roots", "rotation_noise"):
        m = fixtures[name]
        a = covariance.cov(m, 0.8, 1.9)
        b = covariance.cov(m, 0.8, 1.9, method="full")
        assert np.allclose(a, b, rtol=1e-8, atol=1e-9 * np.abs(b).max())


def test_zero_time(fixtures):
    m = fixtures["opposite_roots"]
    assert np.all(covariance.cov(m, 0.0, 1.0) == 0)
    assert np.all(covariance.variance_profile(m, 0.0) == 0)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["jordan_half", "opposite_roots", "rotation_noise", "singular_re_aa"]),
       st.floats(0.1, 20.0))
def test_self_similarity(fixtures, name, c):
    m = fixtures[name]
    P = m.exponent.power(c)
    lhs = covariance.cov(m, c * 0.6, c * 1.4, method="full")
    rhs = P @ covariance.cov(m, 0.6, 1.4, method="full") @ P.T
    assert np.allclose(lhs, rhs, rtol=1e-8, atol=1e-9 * np.abs(lhs).max())


def test_stationary_increment_identity(fixtures):
    res, bound = covariance.stationary_identity_residual(fixtures["opposite_roots"], 0.7, 1.9, return_bound=True)
    assert res <= 10 * max(bound, 1e-12)


def test_reversibility_probe_matches_flags(fixtures):
    for name in ("rotation_noise", "fbm_h070", "obm_2d"):
        m = fixtures[name]
        assert covariance.reversibility_probe(m).symmetric == m.flags["time_reversible"]


def test_tolerance_enforced(fixtures):
    with pytest.raises(ToleranceNotMet):
        covariance.variance_profile(fixtures["fbm_h030"], 1.0, config=QuadratureConfig(tol=1e-30))


def test_boundary_root_warns():
    m = OfbmModel.spectral_model(ExponentSpec.scalar(0.995), [[1.0]])
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        try:
            covariance.variance_profile(m, 1.0)
        except ToleranceNotMet:
            pass
    assert any(issubclass(w.category, LowAccuracy) for w in rec)


def test_determinant_diagnostic_detects_properness(fixtures):
    assert covariance.determinant_diagnostic(fixtures["singular_re_aa"]) > 0

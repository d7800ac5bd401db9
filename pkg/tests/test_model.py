import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import sqrtm
from scipy.special import gamma

from ofbm import model
from ofbm.errors import NotObm, ValidationError, WrongExponent
from ofbm.model import BrownianCaseParam, ExponentSpec, OfbmModel, SpectralParam, TimeParam
from ofbm.verify import random_exponent


@pytest.mark.parametrize("h", [0.0, 1.0, 1.2, -0.1])
def test_roots_outside_unit_interval_rejected(h):
    with pytest.raises(ValidationError):
        ExponentSpec.scalar(h)


def test_scalar_conversion_closed_form():
    # M_plus = 1, M_minus = 0 gives |A|^2 = Gamma(d + 1)^2 / (2 pi)
    for h in (0.2, 0.35, 0.7, 0.9):
        ex = ExponentSpec.scalar(h)
        aa = model.aa_star_from_m(TimeParam(np.eye(1), np.zeros((1, 1))), ex)
        assert aa[0, 0].real == pytest.approx(gamma(h + 0.5) ** 2 / (2 * math.pi), rel=1e-13)


def test_scalar_reversed_kernel_has_same_density():
    ex = ExponentSpec.scalar(0.7)
    a = model.aa_star_from_m(TimeParam(np.eye(1), np.zeros((1, 1))), ex)
    b = model.aa_star_from_m(TimeParam(np.zeros((1, 1)), np.eye(1)), ex)
    assert a[0, 0] == pytest.approx(b[0, 0], rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_conversion_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    ex = random_exponent(rng, n)
    A = SpectralParam(rng.normal(size=(n, n)), rng.normal(size=(n, n)))
    M = model.m_from_a(A, ex)
    back = model.a_from_m(M, ex)
    assert np.allclose(back.A1, A.A1, atol=1e-12)
    assert np.allclose(back.A2, A.A2, atol=1e-12)
    aa = A.A @ A.A.conj().T
    assert np.allclose(model.aa_star_from_m(M, ex), aa, atol=1e-10 * max(1, np.abs(aa).max()))


def test_time_param_needs_no_half_root():
    ex = ExponentSpec.from_matrix(np.diag([0.5, 0.7]))
    with pytest.raises(ValidationError):
        OfbmModel(ex, TimeParam(np.eye(2), np.eye(2)))


def test_brownian_param_needs_half_identity():
    with pytest.raises(WrongExponent):
        OfbmModel(ExponentSpec.from_matrix(np.diag([0.5, 0.7])), BrownianCaseParam(np.eye(2), np.eye(2)))


def test_brownian_round_trip():
    rng = np.random.default_rng(3)
    ex = ExponentSpec.from_matrix(0.5 * np.eye(2))
    B = BrownianCaseParam(rng.normal(size=(2, 2)), rng.normal(size=(2, 2)))
    m = OfbmModel(ex, B)
    again = model.brownian_params(m.spectral, ex)
    assert np.allclose(again.M, B.M) and np.allclose(again.N, B.N)


def test_shape_and_reality_checks():
    ex = ExponentSpec.scalar(0.3)
    with pytest.raises(ValidationError):
        OfbmModel(ex, SpectralParam(np.eye(2), np.eye(2)))
    with pytest.raises(ValidationError):
        OfbmModel(ex, SpectralParam(np.array([[np.nan]]), np.zeros((1, 1))))


def test_fixture_flags(fixtures):
    assert fixtures["rotation_noise"].flags == {
        "proper_certified": True, "time_reversible": False, "is_obm": False}
    assert fixtures["obm_2d"].flags["is_obm"]
    assert not fixtures["singular_re_aa"].flags["proper_certified"]
    assert fixtures["fbm_h030"].flags["time_reversible"]


def test_rank_deficient_a_reversibility_from_square_root(fixtures):
    # independent oracle: principal square root of [[1, i], [-i, 1]]
    A = sqrtm(np.array([[1, 1j], [-1j, 1]]))
    A1, A2 = A.real, A.imag
    want = np.allclose(A2 @ A1.T, A1 @ A2.T)
    m = fixtures["rank_deficient_a"]
    assert np.allclose(m.spectral.A1, A1, atol=1e-12) and np.allclose(m.spectral.A2, A2, atol=1e-12)
    assert model.check_time_reversible(m) == want
    assert model.check_proper(m).certified


def test_obm_root(fixtures):
    m = fixtures["obm_2d"]
    W = model.obm_root(m)
    assert np.allclose(W @ W, m.re_aa) and np.allclose(W, W.T)
    with pytest.raises(NotObm):
        model.obm_root(fixtures["fbm_h070"])


def test_power_of_exponent():
    ex = ExponentSpec.from_matrix(np.array([[0.6, 0.2], [-0.2, 0.6]]))
    assert np.allclose(ex.power(2.0) @ ex.power(0.5), np.eye(2))
    assert np.all(ex.power(0) == 0)

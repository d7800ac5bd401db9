import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import cosm, expm, logm, sinm
from scipy.special import gamma

from ofbm import matfun
from ofbm.errors import NonDiagonalizable, StemSingular, ValidationError

ROTATION = np.array([[0.6, 0.2], [-0.2, 0.6]])
GENERAL = np.array([[0.7, 0.1, 0.0], [0.05, 0.4, 0.2], [0.0, -0.1, 0.8]])


def jordan_2(lam=0.3):
    return matfun.from_jordan(np.array([[1.0, 0.5], [0.2, 1.0]]), [(lam, 2)])


@pytest.mark.parametrize("H", [np.diag([0.3, 0.8]), ROTATION, GENERAL])
def test_decompose_reconstructs(H):
    S = matfun.decompose(H)
    assert np.allclose(S.matrix(), H, atol=1e-13)


def test_defective_matrix_is_rejected():
    with pytest.raises(NonDiagonalizable):
        matfun.decompose([[0.3, 1.0], [0.0, 0.3]])


def test_from_jordan_size_mismatch():
    with pytest.raises(ValidationError):
        matfun.from_jordan(np.eye(2), [(0.3, 1)])


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_block_power_is_lower_toeplitz_in_logs(r):
    z, lam = 3.7, 0.2 + 0.3j
    got = matfun.jordan_block_apply(matfun.Power(z), matfun.JordanBlock(lam, r))
    for i in range(r):
        for j in range(r):
            want = z**lam * math.log(z) ** (i - j) / math.factorial(i - j) if i >= j else 0
            assert abs(got[i, j] - want) <= 1e-14


@pytest.mark.parametrize("H", [np.diag([0.3, 0.8]), ROTATION, GENERAL])
def test_power_matches_expm(H):
    S = matfun.decompose(H)
    for x in (0.01, 0.5, 40.0):
        got = matfun.power_batch(S, [x], sign=-1)[0]
        assert np.allclose(got, expm(-math.log(x) * H), rtol=1e-12, atol=1e-13)


def test_jordan_power_matches_expm():
    S = jordan_2()
    L = S.matrix().real
    x = 2.5
    assert np.allclose(matfun.power_batch(S, [x], sign=1)[0], expm(math.log(x) * L), atol=1e-13)


@pytest.mark.parametrize("H", [ROTATION, GENERAL])
def test_trig_stems_match_scipy(H):
    S = matfun.decompose(H)
    assert np.allclose(matfun.primary_matfun(matfun.SinHalfPi(), S), sinm(np.pi * H / 2), atol=1e-13)
    assert np.allclose(matfun.primary_matfun(matfun.CosHalfPi(), S), cosm(np.pi * H / 2), atol=1e-13)


def test_exp_half_pi_is_complex():
    S = matfun.decompose(GENERAL)
    got = matfun.primary_matfun(matfun.ExpHalfPi(1), S)
    assert np.allclose(got, expm(-1j * np.pi * GENERAL / 2), atol=1e-13)


def test_gamma_stem_on_jordan_block():
    # derivative of Gamma(z + 1) at 0.3 sits below the diagonal
    S = matfun.from_jordan(np.eye(2), [(0.3, 2)])
    G = matfun.primary_matfun(matfun.GammaShift(), S)
    assert G[0, 0] == pytest.approx(gamma(1.3), rel=1e-14)
    assert G[1, 0] == pytest.approx(float(mpmath.diff(mpmath.gamma, 1.3)), rel=1e-12)
    assert G[0, 1] == 0


def test_inverse_and_singular_stem():
    S = matfun.decompose(GENERAL)
    G = matfun.primary_matfun(matfun.GammaShift(), S)
    assert np.allclose(matfun.primary_matfun_inverse(matfun.GammaShift(), S) @ G, np.eye(3), atol=1e-12)
    S1 = matfun.decompose(np.diag([1.0, 0.4]))
    with pytest.raises(StemSingular):
        matfun.primary_matfun_inverse(matfun.CosHalfPi(), S1)


def test_power_difference_against_high_precision():
    S = jordan_2(0.2)
    a = np.array([1.0, 1.0 + 1e-9, 3.0, 0.0, 2.0])
    b = np.array([1.0 - 1e-9, 1.0, 0.5, 2.0, 0.0])
    got = matfun.power_difference_batch(S, a, b)
    mpmath.mp.dps = 40
    L = mpmath.matrix(S.matrix().real.tolist())
    for k in range(a.size):
        def p(x):
            return mpmath.expm(mpmath.log(x) * L) if x > 0 else mpmath.zeros(2, 2)
        want = np.array((p(mpmath.mpf(a[k])) - p(mpmath.mpf(b[k]))).tolist(), dtype=float)
        assert np.allclose(got[k], want, rtol=1e-9, atol=1e-22)
    mpmath.mp.dps = 15


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(-0.3, 0.3),
    st.floats(0.01, 100.0), st.floats(0.01, 100.0),
)
def test_group_law(h1, h2, c, x, y):
    H = np.array([[h1, c], [0.0, h2]])
    if abs(h1 - h2) < 1e-3:
        H[0, 1] = 0.0
    S = matfun.decompose(H)
    px, py, pxy = matfun.power_batch(S, [x, y, x * y], sign=-1)
    assert np.allclose(px @ py, pxy, rtol=1e-10, atol=1e-10 * np.abs(pxy).max())


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.01, 0.4), st.floats(0.1, 10.0))
def test_power_log_round_trip(a, b, x):
    H = np.array([[a, b], [-b, a]])
    P = matfun.power_batch(matfun.decompose(H), [x], sign=1)[0]
    assert np.allclose(logm(P).real / math.log(x) if x != 1 else H, H, atol=1e-8)


@pytest.mark.parametrize("side", ["+", "-"])
def test_signed_power_zero_on_wrong_side(side):
    S = matfun.decompose(np.diag([0.2, -0.1]))
    for x in (-2.0, 0.0, 3.0):
        got = matfun.matrix_power_signed(S, x, side=side)
        live = x > 0 if side == "+" else x < 0
        if live:
            assert np.allclose(got, np.diag([abs(x) ** -0.2, abs(x) ** 0.1]))
        else:
            assert np.all(got == 0)

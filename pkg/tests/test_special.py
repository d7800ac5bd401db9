import math

import mpmath
import numpy as np
import pytest
from scipy import special as sps

from ofbm import special
from ofbm.errors import DerivativeUnavailable, StemSingular

POINTS = [0.3, 1.7, 12.5, 0.4 + 0.8j, -0.6 + 0.2j, 2.0 - 3.0j]


def test_euler_constant():
    assert special.EULER_GAMMA == pytest.approx(np.euler_gamma, abs=1e-16)


@pytest.mark.parametrize("m", range(0, 6))
@pytest.mark.parametrize("z", POINTS)
def test_polygamma_matches_mpmath(m, z):
    want = complex(mpmath.polygamma(m, mpmath.mpc(z)))
    got = special.polygamma(m, z)
    assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


@pytest.mark.parametrize("m", range(0, 4))
def test_polygamma_real_axis_matches_scipy(m):
    x = np.linspace(0.05, 30, 37)
    got = np.array([special.polygamma(m, v).real for v in x])
    assert np.allclose(got, sps.polygamma(m, x), rtol=1e-12, atol=0)


@pytest.mark.parametrize("w", [0.55, 1.5, 0.7 + 0.4j, 1.2 - 0.3j])
def test_gamma_derivatives_match_mpmath(w):
    got = special.gamma_derivatives(w, 4)
    for k, g in enumerate(got):
        want = complex(mpmath.diff(mpmath.gamma, mpmath.mpc(w), k))
        assert abs(g - want) <= 1e-10 * max(1.0, abs(want))


def test_gamma_value_is_scipy_gamma():
    assert special.gamma_derivatives(0.8, 0)[0] == pytest.approx(math.gamma(0.8), rel=1e-15)


def test_poles_raise():
    with pytest.raises(StemSingular):
        special.polygamma(1, -2.0)
    with pytest.raises(StemSingular):
        special.gamma_derivatives(0.0, 1)


def test_order_cap():
    with pytest.raises(DerivativeUnavailable):
        special.polygamma(special.MAX_ORDER + 1, 1.0)
    with pytest.raises(DerivativeUnavailable):
        special.gamma_derivatives(1.0, special.MAX_ORDER + 1)

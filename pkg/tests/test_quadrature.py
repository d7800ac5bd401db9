import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ofbm.quadrature import normalize_terms, integrate_scalar, taylor_coeffs, numerator


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 50.0), st.floats(0.01, 50.0))
def test_frullani(a, b):
    # int_0^inf (cos ax - cos bx) / x dx = log(b / a)
    v, err = integrate_scalar([("cos", a, 1.0), ("cos", b, -1.0)])
    assert v == pytest.approx(math.log(b / a), abs=1e-10)
    assert err <= 1e-8


@pytest.mark.parametrize("a", [0.3, 1.0, -4.0])
def test_dirichlet(a):
    v, _ = integrate_scalar([("sin", a, 1.0)])
    assert v == pytest.approx(math.copysign(math.pi / 2, a), abs=1e-10)


@pytest.mark.parametrize("a", [0.5, 2.0, 7.0])
def test_log_sine(a):
    v, _ = integrate_scalar([("sin", a, 1.0)], weight="log_inv")
    assert v == pytest.approx(-math.pi / 2 * (np.euler_gamma + math.log(a)), abs=1e-9)


def test_nonvanishing_sum_rejected():
    with pytest.raises(ValueError):
        integrate_scalar([("cos", 1.0, 1.0)])
    with pytest.raises(ValueError):
        integrate_scalar([("sin", 1.0, 1.0)], weight="bogus")


def test_normalize_terms_folds_signs():
    c0, terms = normalize_terms([("sin", -2.0, 1.0), ("sin", 2.0, 1.0), ("cos", 0.0, 3.0), ("cos", -1.0, 2.0)])
    assert c0 == 3.0
    assert [(t.kind, t.omega, t.coef) for t in terms] == [("cos", 1.0, 2.0)]


def test_taylor_matches_numerator():
    c0, terms = normalize_terms([("cos", 0.7, 1.0), ("sin", 1.3, -2.0), ("cos", 0.0, -1.0)])
    a = taylor_coeffs(c0, terms, 30)
    x = 0.4
    assert sum(a[j] * x**j for j in range(a.size)) == pytest.approx(float(numerator(x, c0, terms)), abs=1e-15)

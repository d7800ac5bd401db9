"""Gamma-function derivatives and polygamma functions for complex arguments.

scipy only offers real-argument polygamma, and Jordan blocks at complex roots
need derivatives of Gamma(z + 1) off the real axis, so the series are done here.
"""
from math import comb, factorial

import numpy as np
from scipy.special import gamma as _gamma

from .errors import DerivativeUnavailable, StemSingular

EULER_GAMMA = 0.5772156649015329

# B_2, B_4, ..., B_20
_BERNOULLI_EVEN = (
    1 / 6,
    -1 / 30,
    1 / 42,
    -1 / 30,
    5 / 66,
    -691 / 2730,
    7 / 6,
    -3617 / 510,
    43867 / 798,
    -174611 / 330,
)

MAX_ORDER = 8
_SHIFT_TO = 20.0


def _asymptotic(m, z):
    if m == 0:
        out = np.log(z) - 0.5 / z
        z2 = z * z
        zp = z2
        for k, b in enumerate(_BERNOULLI_EVEN, start=1):
            out -= b / (2 * k * zp)
            zp = zp * z2
        return out
    out = factorial(m - 1) / z**m + factorial(m) / (2 * z ** (m + 1))
    for k, b in enumerate(_BERNOULLI_EVEN, start=1):
        out += b * factorial(2 * k + m - 1) / (factorial(2 * k) * z ** (2 * k + m))
    return (-1) ** (m + 1) * out


def polygamma(m, z):
    """psi^(m)(z) for integer m >= 0 and complex z off the non-positive integers."""
    if m < 0 or m > MAX_ORDER:
        raise DerivativeUnavailable(f"polygamma order {m} outside 0..{MAX_ORDER}")
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0 and z.real == round(z.real):
        raise StemSingular(f"polygamma pole at z = {z.real:g}")
    acc = 0j
    sign_fact = (-1) ** m * factorial(m)
    # psi^(m)(z + 1) = psi^(m)(z) + (-1)^m m! z^(-m-1)
    while z.real < _SHIFT_TO:
        acc -= sign_fact / z ** (m + 1)
        z += 1.0
    return acc + _asymptotic(m, z)


def gamma_derivatives(w, order):
    """[Gamma(w), Gamma'(w), ..., Gamma^(order)(w)] for complex w.

    Uses Gamma' = Gamma psi and Leibniz on that product.
    """
    if order > MAX_ORDER:
        raise DerivativeUnavailable(f"Gamma derivative order {order} exceeds {MAX_ORDER}")
    w = complex(w)
    if w.imag == 0.0 and w.real <= 0 and w.real == round(w.real):
        raise StemSingular(f"Gamma pole at {w.real:g}")
    g0 = complex(_gamma(w))
    psis = [polygamma(j, w) for j in range(order)]
    derivs = [g0]
    for k in range(order):
        derivs.append(sum(comb(k, j) * derivs[j] * psis[k - j] for j in range(k + 1)))
    return derivs

"""Covariance function E B(s) B(t)* of an OFBM.

With AA* = R + iS (R symmetric, S antisymmetric) the spectral integral folds to
the half line:

    E B(s)B(t)* = 2 int_0^inf [Re w(x) x^{-D} R x^{-D^T} - Im w(x) x^{-D} S x^{-D^T}] dx,
    w(x) = (e^{isx} - 1)(e^{-itx} - 1) / x^2.

The symmetric part equals (V(s) + V(t) - V(t - s)) / 2 with V(r) = E B(r)B(r)*,
and V(r) = r^H V(1) r^{H^T}. The antisymmetric part U(s, t) needs oscillatory
quadrature and vanishes for time-reversible models.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import LowAccuracy, ToleranceNotMet
from .quadrature import MomentIntegrator, QuadratureConfig

CERTIFIED_D = 0.49


@dataclass(frozen=True, eq=False)
class CovarianceReport:
    grid: tuple
    values: np.ndarray
    errors: np.ndarray
    method: str


def _warn_accuracy(model):
    for d in model.exponent.d_roots:
        if not -CERTIFIED_D < d.real < CERTIFIED_D:
            warnings.warn(
                f"root d = {d:.4g} is within 0.01 of the boundary; error bounds are not certified",
                LowAccuracy,
                stacklevel=3,
            )
            return


def _integrator(model, which, config):
    key = ("integrator", which, config)
    if key not in model._memo:
        K = model.re_aa if which == "re" else model.im_aa
        model._memo[key] = MomentIntegrator(model.exponent.d_decomposition, K, config)
    return model._memo[key]


def _enforce(value, err, config, what):
    achieved = float(np.max(err))
    if achieved > config.tol * max(1.0, float(np.abs(value).max())):
        raise ToleranceNotMet(f"{what}: error bound {achieved:.3g} above tolerance", achieved)


def _abs_sandwich(P, E):
    return np.abs(P) @ E @ np.abs(P).T


def _variance_direct(model, r, config):
    I = _integrator(model, "re", config)
    v, e = I.integrate(2.0, [("cos", r, -2.0)])
    return 2 * v, 2 * e


def _variance_one(model, config):
    key = ("V1", config)
    if key not in model._memo:
        model._memo[key] = _variance_direct(model, 1.0, config)
    return model._memo[key]


def variance_profile(model, r, config=None, method="direct", return_error=False):
    """V(r) = E B(r) B(r)*.

    method 'direct' integrates at radius r; 'scaling' maps V(1) through r^H.
    """
    config = config or QuadratureConfig()
    _warn_accuracy(model)
    n = model.n
    r = abs(float(r))
    if r == 0.0 or not np.any(model.re_aa):
        V, E = np.zeros((n, n)), np.zeros((n, n))
    elif method == "direct":
        V, E = _variance_direct(model, r, config)
    elif method == "scaling":
        V1, E1 = _variance_one(model, config)
        P = model.exponent.power(r)
        V, E = P @ V1 @ P.T, _abs_sandwich(P, E1)
    else:
        raise ValueError(f"unknown method {method!r}")
    V = (V + V.T) / 2
    _enforce(V, E, config, f"V({r:g})")
    return (V, E) if return_error else V


def cov_time_reversible(exponent, gamma11, s, t):
    """Closed-form covariance of a time-reversible model from Gamma(1,1)."""
    G = np.asarray(gamma11, dtype=float)

    def term(r):
        P = exponent.power(abs(r))
        return P @ G @ P.T

    return 0.5 * (term(t) + term(s) - term(t - s))


def _antisymmetric(model, s, t, config):
    I = _integrator(model, "im", config)
    u, e = I.integrate(0.0, [("sin", s - t, 1.0), ("sin", s, -1.0), ("sin", t, 1.0)])
    return -2 * u, 2 * e


def _symmetric_direct(model, s, t, config):
    I = _integrator(model, "re", config)
    v, e = I.integrate(1.0, [("cos", s - t, 1.0), ("cos", s, -1.0), ("cos", t, -1.0)])
    return 2 * v, 2 * e


def cov(model, s, t, method="auto", config=None, return_error=False):
    """E B(s) B(t)*.

    'auto' builds the symmetric part from V(1) by exact scaling and skips the
    antisymmetric part for time-reversible models; 'full' integrates both parts
    directly at (s, t).
    """
    config = config or QuadratureConfig()
    _warn_accuracy(model)
    n = model.n
    s, t = float(s), float(t)
    if method == "auto":
        V1, E1 = _variance_one(model, config)
        sym = cov_time_reversible(model.exponent, V1, s, t)
        err = np.zeros((n, n))
        for r in (s, t, t - s):
            if r != 0:
                err = err + 0.5 * _abs_sandwich(model.exponent.power(abs(r)), E1)
        if model.flags["time_reversible"]:
            value = sym
        else:
            U, Ue = _antisymmetric(model, s, t, config)
            value, err = sym + U, err + Ue
    elif method == "full":
        if s == 0 or t == 0 or not np.any(model.re_aa):
            value, err = np.zeros((n, n)), np.zeros((n, n))
        elif s == t:
            value, err = _variance_direct(model, abs(s), config)
        else:
            value, err = _symmetric_direct(model, s, t, config)
        if s != 0 and t != 0 and s != t and np.any(model.im_aa):
            U, Ue = _antisymmetric(model, s, t, config)
            value, err = value + U, err + Ue
    else:
        raise ValueError(f"unknown method {method!r}")
    _enforce(value, err, config, f"cov({s:g}, {t:g})")
    return (value, err) if return_error else value


def method_tag(model, method):
    if method == "full":
        return "quadrature-full"
    return "closed-form" if model.flags["time_reversible"] else "quadrature-symmetric"


def covariance_report(model, pairs, method="auto", config=None):
    pairs = tuple((float(s), float(t)) for s, t in pairs)
    n = model.n
    vals = np.zeros((len(pairs), n, n))
    errs = np.zeros((len(pairs), n, n))
    for k, (s, t) in enumerate(pairs):
        vals[k], errs[k] = cov(model, s, t, method=method, config=config, return_error=True)
    return CovarianceReport(pairs, vals, errs, method_tag(model, method))


def stationary_identity_residual(model, s, t, config=None, return_bound=False):
    """max |cov(s,t) + cov(t,s) - [V(t) + V(s) - V(t-s)]| with every term integrated directly."""
    c1, e1 = cov(model, s, t, method="full", config=config, return_error=True)
    c2, e2 = cov(model, t, s, method="full", config=config, return_error=True)
    rhs = np.zeros((model.n, model.n))
    bound = e1 + e2
    for r, sign in ((t, 1), (s, 1), (t - s, -1)):
        V, E = variance_profile(model, r, config=config, return_error=True)
        rhs += sign * V
        bound = bound + E
    res = float(np.abs(c1 + c2 - rhs).max())
    return (res, float(bound.max())) if return_bound else res


@dataclass(frozen=True)
class ReversibilityProbe:
    gap: float
    bound: float
    symmetric: bool


def reversibility_probe(model, times=(0.3, 0.7, 1.0, 1.6, 2.5), config=None, factor=10.0):
    """Largest |cov(s,t) - cov(t,s)| over a grid, from direct quadrature.

    Since cov(t,s) = cov(s,t)^T always, this measures the antisymmetric part.
    """
    gap = 0.0
    bound = 0.0
    for s in times:
        for t in times:
            if s >= t:
                continue
            c1, e1 = cov(model, s, t, method="full", config=config, return_error=True)
            c2, e2 = cov(model, t, s, method="full", config=config, return_error=True)
            gap = max(gap, float(np.abs(c1 - c2).max()))
            bound = max(bound, float((e1 + e2).max()))
    # scale-aware floor so an exactly zero bound still tolerates rounding
    floor = 1e-12 * max(1.0, float(np.abs(variance_profile(model, max(times), config=config)).max()))
    return ReversibilityProbe(gap, bound, gap <= factor * max(bound, floor))


def determinant_diagnostic(model, config=None):
    """det V(1): positive values show properness even when the certificate fails."""
    return float(np.linalg.det(variance_profile(model, 1.0, config=config)))

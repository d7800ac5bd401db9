"""Spectral densities of operator fractional Gaussian noise (increments of an OFBM).

Continuous time:
    f(x) = |e^{ix} - 1|^2 / x^2 (x_+^{-D} AA* x_+^{-D^T} + x_-^{-D} conj(AA*) x_-^{-D^T})
Discrete time (folding f onto [-pi, pi]):
    g(x) = sum_k f(x + 2 pi k)

The discrete sum is truncated at |k| <= K. The rest is replaced by a midpoint
Euler-Maclaurin tail whose integral part is exact: with y0 > 0,

    int_{y0}^inf y^{-2} y^{-D} K y^{-D^T} dy = y0^{-1} y0^{-D} X y0^{-D^T},
    (I/2 + D) X + X (I/2 + D)^T = K.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from . import matfun
from .errors import AmbiguousEntry, LrdRangeError
from .quadrature import gauss_legendre

DIVERGES = "DIVERGES"
ZERO = "ZERO"
BOUNDED = "BOUNDED"
ZERO_TOL = 1e-10
OUTSIDE_BANNER = "outside the dichotomy theorem hypothesis (all roots need 1/2 < Re h < 1)"


@dataclass(frozen=True, eq=False)
class SpectrumGrid:
    frequencies: np.ndarray
    values: np.ndarray
    K: np.ndarray
    tail_bound: np.ndarray


def _h_batch(model, y, conj=False):
    """y^{-D} K y^{-D^T} for y > 0 with K = AA* (or its conjugate)."""
    P = matfun.power_batch(model.exponent.d_decomposition, y, sign=-1)
    K = model.re_aa - 1j * model.im_aa if conj else model.re_aa + 1j * model.im_aa
    return P @ K @ np.swapaxes(P, 1, 2)


def pure_density(model, x):
    """x^{-D} AA* x^{-D^T} for x > 0 (the factor that carries the scaling law)."""
    return _h_batch(model, np.atleast_1d(np.asarray(x, dtype=float)))


def _f_batch(model, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = model.n
    out = np.zeros((x.size, n, n), dtype=complex)
    weight = np.zeros(x.size)
    nz = x != 0
    weight[nz] = (2 * np.sin(x[nz] / 2) / x[nz]) ** 2
    pos, neg = x > 0, x < 0
    if np.any(pos):
        out[pos] = weight[pos, None, None] * _h_batch(model, x[pos])
    if np.any(neg):
        out[neg] = weight[neg, None, None] * _h_batch(model, -x[neg], conj=True)
    return out


def ofgn_density_ct(model, x):
    """Continuous-time density f(x); a matrix for scalar x, a stack for arrays."""
    out = _f_batch(model, x)
    return out[0] if np.ndim(x) == 0 else out


def _tail_pieces(model, y0, conj):
    """Midpoint Euler-Maclaurin pieces for sum_{k >= K+1} y_k^{-2} h(y_k), y_k = y0 + 2 pi (k - K - 1/2).

    Returns (integral term, first correction term).
    """
    ex = model.exponent
    n = model.n
    K = model.re_aa - 1j * model.im_aa if conj else model.re_aa + 1j * model.im_aa
    X = solve_continuous_lyapunov(0.5 * np.eye(n) + ex.D, K)
    P = matfun.power_batch(ex.d_decomposition, [y0], sign=-1)[0]
    integral = P @ X @ P.T / y0 / (2 * np.pi)
    # d/dy [y^{-2} y^{-D} K y^{-D^T}], times dy/dk = 2 pi, over 24
    deriv = -P @ (2 * K + ex.D @ K + K @ ex.D.T) @ P.T / y0**3
    return integral, 2 * np.pi * deriv / 24


def _dt_sum(model, x, K):
    """Truncated sum over |k| <= K; x is a 1-d array in [-pi, pi]."""
    n = model.n
    ks = np.arange(-K, K + 1)
    ys = (x[:, None] + 2 * np.pi * ks[None, :]).ravel()
    return _f_batch(model, ys).reshape(x.size, ks.size, n, n).sum(axis=1)


def _tail_correction(model, x, K):
    """Tail for |k| > K, plus an error estimate for it.

    cos(x + 2 pi k) = cos(x), so 2(1 - cos x) factors out of the folded sum.
    """
    n = model.n
    out = np.zeros((x.size, n, n), dtype=complex)
    err = np.zeros(x.size)
    c = 4 * np.sin(x / 2) ** 2
    r = max(b.size for b in model.exponent.d_decomposition.blocks)
    for i, xi in enumerate(x):
        for y0, conj in ((2 * np.pi * (K + 0.5) + xi, False), (2 * np.pi * (K + 0.5) - xi, True)):
            integ, corr = _tail_pieces(model, y0, conj)
            out[i] += c[i] * (integ + corr)
            # the next term is smaller than the first correction by about (2 pi / y0)^2
            err[i] += c[i] * np.abs(corr).max() * (2 * np.pi / y0) ** 2 * (1 + np.log(y0)) ** (2 * r - 2) * 10
    return out, err


def ofgn_density_dt(model, x, tol=1e-10, K_start=16, K_max=1 << 16):
    """Discrete-time density g(x) on [-pi, pi] with the truncation index and error estimate.

    Returns (value, K, tail_bound) for scalar x, or a SpectrumGrid for arrays.
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(xs) > np.pi + 1e-12):
        raise ValueError("frequencies must lie in [-pi, pi]")
    n = model.n
    values = np.zeros((xs.size, n, n), dtype=complex)
    Ks = np.zeros(xs.size, dtype=int)
    bounds = np.zeros(xs.size)
    todo = np.arange(xs.size)
    K = K_start
    while todo.size:
        sub = xs[todo]
        v = _dt_sum(model, sub, K)
        tail, err = _tail_correction(model, sub, K)
        v = v + tail
        scale = np.maximum(1.0, np.abs(v).max(axis=(1, 2)))
        done = (err <= tol * scale) | (2 * K > K_max)
        values[todo[done]] = v[done]
        Ks[todo[done]] = K
        bounds[todo[done]] = err[done]
        todo = todo[~done]
        K *= 2
    values = (values + np.conj(np.swapaxes(values, 1, 2))) / 2
    if scalar:
        return values[0], int(Ks[0]), float(bounds[0])
    return SpectrumGrid(xs, values, Ks, bounds)


def tail_envelope(model, K, x=np.pi):
    """Size of the omitted part sum_{|k| > K} at frequency x, before correction."""
    c = 4 * np.sin(x / 2) ** 2
    total = 0.0
    for y0, conj in ((2 * np.pi * (K + 0.5) + x, False), (2 * np.pi * (K + 0.5) - x, True)):
        integ, _ = _tail_pieces(model, y0, conj)
        total += c * np.abs(integ).max()
    return total


def dt_integral(model, tol=1e-10):
    """int_{-pi}^{pi} g(x) dx, which must equal V(1).

    Graded panels towards the x^{-2d} singularity at 0.
    """
    d_max = max(d.real for d in model.exponent.d_roots)
    levels = int(np.ceil(16 * np.log2(10) / max(1 - 2 * max(d_max, 0.0), 0.05)))
    k = np.arange(levels)
    lo = np.pi * 2.0 ** (-k - 1)
    hi = np.pi * 2.0 ** (-k)
    total = []
    for order in (16, 8):
        xg, wg = gauss_legendre(order)
        half, mid = (hi - lo) / 2, (hi + lo) / 2
        nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
        weights = (half[:, None] * wg[None, :]).ravel()
        acc = 0.0
        for sign in (1.0, -1.0):
            grid = ofgn_density_dt(model, sign * nodes, tol=tol)
            acc = acc + np.einsum("m,mij->ij", weights, grid.values)
        total.append(acc)
    return total[0], np.abs(total[0] - total[1])


@dataclass(frozen=True, eq=False)
class DichotomyReport:
    labels: np.ndarray
    probes: np.ndarray
    values: np.ndarray
    banner: str = ""


def _check_lrd(model):
    for h in model.exponent.roots:
        if not 0.5 < h.real < 1.0:
            return h
    return None


GROWTH = 1.5


def _growing(mag):
    """Entry grows toward 0 on a probe grid ordered from small to large x.

    Compares the smallest-x quarter with the largest-x quarter; a factor is
    required so rounding noise on a constant entry does not count as growth.
    """
    q = max(1, mag.size // 4)
    return mag[:q].max() > GROWTH * mag[-q:].max()


def dichotomy_classify(model, probes=None, diagnostic=False):
    """Label every entry of the OFGN density as DIVERGES or ZERO near frequency 0.

    Probes h(x) = x^{-D} AA* x^{-D^T}, the term that decides the limit. Outside the
    long-range range this raises LrdRangeError unless diagnostic=True, in which
    case bounded entries are labeled BOUNDED and the report carries a banner.
    """
    bad = _check_lrd(model)
    if bad is not None and not diagnostic:
        raise LrdRangeError(f"root h = {bad:.6g} is outside (1/2, 1)", bad)
    probes = np.logspace(-8, -1, 20) if probes is None else np.sort(np.asarray(probes, dtype=float))
    n = model.n
    labels = np.empty((n, n), dtype=object)
    for _ in range(4):
        values = pure_density(model, probes)
        mag = np.abs(values)
        scale = max(mag.max(), np.finfo(float).tiny)
        ambiguous = []
        for i in range(n):
            for j in range(n):
                m = mag[:, i, j]
                if m.max() <= ZERO_TOL * scale:
                    labels[i, j] = ZERO
                elif _growing(m):
                    labels[i, j] = DIVERGES
                elif diagnostic:
                    labels[i, j] = BOUNDED
                else:
                    ambiguous.append((i, j))
        if not ambiguous:
            break
        # push the grid further toward 0 before giving up
        probes = np.concatenate([probes[0] * np.logspace(-8, -1, 8), probes])
    else:
        raise AmbiguousEntry(f"entries {ambiguous} neither vanish nor grow toward 0")
    banner = OUTSIDE_BANNER if bad is not None else ""
    return DichotomyReport(labels, probes, values, banner)

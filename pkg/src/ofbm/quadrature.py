"""Quadrature of  int_0^inf N(x)/x^2 * x^{-D} K x^{-D^T} dx  for trigonometric N.

N(x) = c0 + sum_j coef_j * cos(w_j x)  or  sin(w_j x), with N(x) = O(x^2) at 0.
The half line is cut into three pieces:

* [0, x_lo]: Taylor series of N times exact power moments, each moment being
  x0^{m+1} x0^{-D} X x0^{-D^T} with X from a Lyapunov equation.
* [x_lo, Y]: Gauss-Legendre panels, error from a 16- vs 8-point comparison.
* [Y, inf): the constant part exactly (again a Lyapunov solve) and the
  oscillatory part by repeated integration by parts.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from . import matfun

ROUNDING = 1e-13


@dataclass(frozen=True)
class QuadratureConfig:
    """Frequency-relative cutoffs: x_lo = inner / w_max, Y = outer / w_min."""

    inner: float = 0.5
    outer: float = 80.0
    panels_per_period: int = 4
    tail_mode: str = "asymptotic"
    tol: float = 1e-8

    def __post_init__(self):
        if not 0 < self.inner < 1 < self.outer:
            raise ValueError("need 0 < inner < 1 < outer")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.tail_mode not in ("asymptotic", "truncate"):
            raise ValueError("tail_mode must be 'asymptotic' or 'truncate'")
        if self.panels_per_period < 1:
            raise ValueError("panels_per_period must be >= 1")


@lru_cache(maxsize=None)
def gauss_legendre(k):
    return np.polynomial.legendre.leggauss(k)


@dataclass(frozen=True)
class Trig:
    kind: str
    omega: float
    coef: float


def normalize_terms(terms):
    """Fold negative frequencies, drop zero ones, merge duplicates."""
    out = {}
    for kind, w, c in terms:
        if w < 0:
            w = -w
            if kind == "sin":
                c = -c
        if w == 0 or c == 0:
            if kind == "cos" and w == 0:
                out[("const", 0.0)] = out.get(("const", 0.0), 0.0) + c
            continue
        out[(kind, w)] = out.get((kind, w), 0.0) + c
    c0 = out.pop(("const", 0.0), 0.0)
    return c0, [Trig(k, w, c) for (k, w), c in sorted(out.items()) if c != 0]


def numerator(x, c0, terms):
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, float(c0))
    for t in terms:
        f = np.cos if t.kind == "cos" else np.sin
        out += t.coef * f(t.omega * x)
    return out


def taylor_coeffs(c0, terms, jmax):
    """Coefficients a_j of N(x) = sum_j a_j x^j for j = 0..jmax."""
    a = np.zeros(jmax + 1)
    a[0] = c0
    for t in terms:
        for j in range(jmax + 1):
            if t.kind == "cos" and j % 2 == 0:
                a[j] += t.coef * (-1) ** (j // 2) * t.omega**j / factorial(j)
            elif t.kind == "sin" and j % 2 == 1:
                a[j] += t.coef * (-1) ** (j // 2) * t.omega**j / factorial(j)
    return a


def sandwich(P, K):
    """P K P^T batched over the leading axis of P."""
    return P @ K @ np.swapaxes(P, -1, -2)


class MomentIntegrator:
    """Integrals of trigonometric kernels against x^{-D} K x^{-D^T} for fixed D, K."""

    def __init__(self, d_decomposition, K, config=None):
        self.S = d_decomposition
        self.D = d_decomposition.matrix()
        self.K = np.asarray(K, dtype=float)
        self.n = self.K.shape[0]
        self.config = config or QuadratureConfig()
        self._lyap = {}
        self.k_scale = max(np.abs(self.K).max(), np.finfo(float).tiny)
        self.min_re_d = min(b.eigenvalue.real for b in self.S.blocks)

    def _moment_solution(self, m):
        # ((m+1)/2 I - D) X + X (...)^T = K
        if m not in self._lyap:
            a = (m + 1) / 2 * np.eye(self.n) - self.D
            self._lyap[m] = solve_continuous_lyapunov(a, self.K)
        return self._lyap[m]

    def power_moment(self, m, x0):
        """int_0^x0 x^m x^{-D} K x^{-D^T} dx, for m > 2 Re(d) - 1."""
        P = matfun.power_batch(self.S, [x0], sign=-1)[0]
        return x0 ** (m + 1) * P @ self._moment_solution(m) @ P.T

    def tail_constant(self, Y):
        """int_Y^inf x^-2 x^{-D} K x^{-D^T} dx = Y^-1 Y^{-D} X Y^{-D^T}, H X + X H^T = K."""
        if "tail" not in self._lyap:
            H = self.D + 0.5 * np.eye(self.n)
            self._lyap["tail"] = solve_continuous_lyapunov(H, self.K)
        X = self._lyap["tail"]
        P = matfun.power_batch(self.S, [Y], sign=-1)[0]
        return P @ X @ P.T / Y

    def tail_oscillatory(self, omega, Y, max_terms=40):
        """int_Y^inf e^{i w x} x^-2 x^{-D} K x^{-D^T} dx by integration by parts.

        Returns (complex value, error bound).
        """
        P = matfun.power_batch(self.S, [Y], sign=-1)[0]
        Km = self.K.copy()
        total = np.zeros((self.n, self.n), dtype=complex)
        phase = np.exp(1j * omega * Y)
        iw = 1j * omega
        prev = np.inf
        bound = np.inf
        for m in range(max_terms):
            g = Y ** (-2 - m) * (P @ Km @ P.T)
            term = -phase * (-1) ** m * g / iw ** (m + 1)
            size = np.abs(term).max()
            if size > prev:
                # asymptotic series started to diverge; stop before this term
                break
            total += term
            Km = -(2 + m) * Km - (self.D @ Km + Km @ self.D.T)
            # |int_Y^inf e^{iwx} g^(m+1)| <= int_Y^inf |g^(m+1)| ~ |g^(m+1)(Y)| Y / (m + 2 + 2 Re d)
            g_next = Y ** (-3 - m) * np.abs(P @ Km @ P.T).max()
            decay = max(m + 2 + 2 * self.min_re_d, 0.5)
            bound = 2.0 * g_next * Y / decay / omega ** (m + 1)
            prev = size
            if bound < 1e-17 * max(np.abs(total).max(), self.k_scale * Y ** -2):
                break
        return total, bound

    def integrate(self, c0, terms):
        """(value, error) of int_0^inf N(x)/x^2 x^{-D} K x^{-D^T} dx.

        The error is an entrywise n x n bound.

        terms: iterable of (kind, omega, coef) with kind in {'cos', 'sin'}.
        """
        cfg = self.config
        c0, terms = normalize_terms([("cos", 0.0, c0)] + list(terms))
        if not terms:
            return np.zeros((self.n, self.n)), np.zeros((self.n, self.n))
        omegas = np.array([t.omega for t in terms])
        w_max, w_min = omegas.max(), omegas.min()
        a = taylor_coeffs(c0, terms, 1)
        coef_scale = max(abs(c0), max(abs(t.coef) for t in terms))
        if abs(a[0]) > 1e-12 * coef_scale or abs(a[1]) > 1e-12 * coef_scale * w_max:
            raise ValueError("numerator must vanish to second order at x = 0")

        # near zero: coefficients of N(x_lo * y) in y keep (w x_lo)^j / j! bounded
        x_lo = cfg.inner / w_max
        scaled = [Trig(t.kind, t.omega * x_lo, t.coef) for t in terms]
        b = taylor_coeffs(c0, scaled, 60)
        P_lo = matfun.power_batch(self.S, [x_lo], sign=-1)[0]
        near = np.zeros((self.n, self.n))
        first = None
        for j in range(2, b.size):
            if b[j] == 0:
                continue
            # int_0^x_lo x^(j-2) G = x_lo^(j-1) x_lo^{-D} X x_lo^{-D^T}
            piece = b[j] / x_lo * (P_lo @ self._moment_solution(j - 2) @ P_lo.T)
            size = np.abs(piece).max()
            near += piece
            first = size if first is None else first
            if size < 1e-18 * first:
                break
        near_err = ROUNDING * np.abs(near)

        # middle panels
        Y = cfg.outer / w_min
        if cfg.tail_mode == "truncate":
            Y *= 100.0
        width = 2 * np.pi / w_max / cfg.panels_per_period
        edges = [x_lo]
        while edges[-1] < 2.0 / w_max and edges[-1] * 2 - edges[-1] < width:
            edges.append(min(edges[-1] * 2, 2.0 / w_max))
        n_uniform = int(np.ceil((Y - edges[-1]) / width))
        edges = np.concatenate([edges, edges[-1] + width * np.arange(1, n_uniform + 1)])
        Y = edges[-1]
        mid, mid_err = self._panels(edges, c0, terms)

        # tail
        tail = np.zeros((self.n, self.n))
        tail_err = 0.0
        if c0 != 0:
            tail += c0 * self.tail_constant(Y)
        if cfg.tail_mode == "asymptotic":
            for t in terms:
                val, bound = self.tail_oscillatory(t.omega, Y)
                tail += t.coef * (val.real if t.kind == "cos" else val.imag)
                tail_err += abs(t.coef) * bound
        else:
            # extended truncation: oscillatory tail is dropped; bound it crudely
            P = matfun.power_batch(self.S, [Y], sign=-1)[0]
            g = np.abs(P @ self.K @ P.T).max() / Y**2
            tail_err = sum(abs(t.coef) for t in terms) * 2 * g / w_min

        value = near + mid + tail
        scale = max(np.abs(near).max(), np.abs(mid).max(), np.abs(tail).max())
        err = near_err + mid_err + tail_err + ROUNDING * scale
        return value, err

    def _panels(self, edges, c0, terms, chunk=4096):
        x16, w16 = gauss_legendre(16)
        x8, w8 = gauss_legendre(8)
        a, b = edges[:-1], edges[1:]
        half = (b - a) / 2
        mid = (a + b) / 2
        total16 = np.zeros((self.n, self.n))
        total8 = np.zeros((self.n, self.n))
        for nodes, weights, acc in ((x16, w16, total16), (x8, w8, total8)):
            xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
            ws = (half[:, None] * weights[None, :]).ravel()
            f = ws * numerator(xs, c0, terms) / xs**2
            for lo in range(0, xs.size, chunk):
                P = matfun.power_batch(self.S, xs[lo:lo + chunk], sign=-1)
                G = sandwich(P, self.K)
                acc += np.tensordot(f[lo:lo + chunk], G, axes=1)
        return total16, np.abs(total16 - total8)


def _weight_derivative(weight, m, x):
    """m-th derivative of 1/x ('inv') or log(x)/x ('log_inv')."""
    base = (-1) ** m * factorial(m) / x ** (m + 1)
    if weight == "inv":
        return base
    harmonic = sum(1.0 / k for k in range(1, m + 1))
    return base * (np.log(x) - harmonic)


def _weight_moment(weight, j, x0):
    """int_0^x0 x^j w(x) dx for w = 1/x or log(x)/x, j >= 1."""
    if weight == "inv":
        return x0**j / j
    return x0**j * (np.log(x0) / j - 1.0 / j**2)


def integrate_scalar(terms, weight="inv", config=None):
    """int_0^inf w(x) sum_j coef_j trig(w_j x) dx with w(x) = 1/x or log(x)/x.

    The trigonometric sum must vanish at 0 (cosine coefficients sum to zero).
    Returns (value, error bound).
    """
    if weight not in ("inv", "log_inv"):
        raise ValueError("weight must be 'inv' or 'log_inv'")
    cfg = config or QuadratureConfig()
    c0, terms = normalize_terms(list(terms))
    if not terms:
        return 0.0, 0.0
    scale = max(abs(t.coef) for t in terms)
    if abs(c0 + sum(t.coef for t in terms if t.kind == "cos")) > 1e-12 * scale:
        raise ValueError("trigonometric sum must vanish at x = 0")
    omegas = [t.omega for t in terms]
    w_max, w_min = max(omegas), min(omegas)

    x_lo = cfg.inner / w_max
    b = taylor_coeffs(c0, [Trig(t.kind, t.omega * x_lo, t.coef) for t in terms], 60)
    near = 0.0
    for j in range(1, b.size):
        if b[j]:
            # b_j = a_j x_lo^j, and int_0^x_lo x^j w = x_lo^j * (moment at 1 rescaled)
            near += b[j] / x_lo**j * _weight_moment(weight, j, x_lo)

    Y = cfg.outer / w_min
    width = 2 * np.pi / w_max / cfg.panels_per_period
    edges = [x_lo]
    while edges[-1] < width:
        edges.append(2 * edges[-1])
    n_uniform = int(np.ceil((Y - edges[-1]) / width))
    edges = np.concatenate([edges, edges[-1] + width * np.arange(1, n_uniform + 1)])
    Y = edges[-1]
    a_, b_ = edges[:-1], edges[1:]
    half, centre = (b_ - a_) / 2, (a_ + b_) / 2
    vals = []
    for k in (16, 8):
        x, w = gauss_legendre(k)
        xs = (centre[:, None] + half[:, None] * x[None, :]).ravel()
        ws = (half[:, None] * w[None, :]).ravel()
        wx = 1 / xs if weight == "inv" else np.log(xs) / xs
        vals.append(np.sum(ws * wx * numerator(xs, 0.0, terms)))
    mid, mid_err = vals[0], abs(vals[0] - vals[1])

    tail, tail_err = 0.0, 0.0
    for t in terms:
        iw = 1j * t.omega
        acc, prev, bound = 0j, np.inf, np.inf
        for m in range(40):
            term = -np.exp(iw * Y) * (-1) ** m * _weight_derivative(weight, m, Y) / iw ** (m + 1)
            if abs(term) > prev:
                break
            acc += term
            prev = abs(term)
            bound = 2 * abs(_weight_derivative(weight, m + 1, Y)) * Y / (m + 1) / t.omega ** (m + 1)
            if bound < 1e-18 * max(abs(acc), 1e-300):
                break
        tail += t.coef * (acc.real if t.kind == "cos" else acc.imag)
        tail_err += abs(t.coef) * bound
    value = near + mid + tail
    err = mid_err + tail_err + ROUNDING * max(abs(near), abs(mid), abs(tail))
    return float(value), float(err)

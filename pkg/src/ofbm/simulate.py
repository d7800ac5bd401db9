"""Sample paths of an OFBM and Monte Carlo checks.

Spectral method: with nodes x_j > 0, cell widths w_j and G(x) = x^{-D} A,

    X(t) = 2 Re sum_j (e^{i t x_j} - 1)/(i x_j) G(x_j) zeta_j sqrt(w_j),

zeta_j proper complex Gaussian with E zeta zeta* = I. Pairing each x_j with -x_j
through the conjugate makes X(t) real exactly. The mass outside [x_min, x_max]
is restored in distribution:

* below x_min, (e^{itx} - 1)/(ix) ~ t, which gives t Z_low with
  Cov Z_low = 2 x_min x_min^{-D} Y x_min^{-D^T}, (I/2 - D) Y + Y (I/2 - D)^T = Re AA*;
* above x_max, e^{itx}/(ix) decorrelates across grid times, which gives
  xi_t - xi_0 with i.i.d. xi of covariance
  2 x_max^{-1} x_max^{-D} Z x_max^{-D^T}, (I/2 + D) Z + Z (I/2 + D)^T = Re AA*.

Each path draws from its own Philox stream keyed by (seed, path index), so
ensembles do not depend on chunking or generation order.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from . import matfun
from .covariance import cov
from .errors import CovarianceNotPsd, GridMiss

CHUNK = 256
JITTER_START = 1e-14
JITTER_CAP = 1e-10


@dataclass(frozen=True)
class FrequencyGridSpec:
    """Log spacing on [x_min, 1], linear spacing dx on [1, x_max]."""

    x_min: float
    x_max: float
    per_decade: int = 40
    dx: float = 0.05

    def __post_init__(self):
        if not 0 < self.x_min < self.x_max:
            raise ValueError("need 0 < x_min < x_max")
        if self.per_decade < 1 or self.dx <= 0:
            raise ValueError("per_decade must be >= 1 and dx > 0")

    @classmethod
    def for_grid(cls, times, **overrides):
        """Defaults x_min = 1e-6/T, x_max = 200/dt, dx = 0.05/T for span T and step dt."""
        pts = np.unique(np.concatenate([[0.0], np.asarray(times, dtype=float)]))
        T = float(np.abs(pts).max()) or 1.0
        steps = np.diff(pts)
        dt = float(steps.min()) if steps.size else T
        params = {"x_min": 1e-6 / T, "x_max": 200.0 / dt, "dx": 0.05 / T}
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)

    def nodes(self):
        """Midpoints and widths of the cells."""
        lo = min(1.0, self.x_max)
        decades = np.log10(lo / self.x_min)
        k = max(1, int(np.ceil(decades * self.per_decade)))
        log_edges = np.geomspace(self.x_min, lo, k + 1)
        edges = [log_edges]
        if self.x_max > 1.0:
            m = max(1, int(np.ceil((self.x_max - 1.0) / self.dx)))
            edges.append(np.linspace(1.0, self.x_max, m + 1)[1:])
        e = np.concatenate(edges)
        mids = np.where(e[1:] <= 1.0, np.sqrt(e[:-1] * e[1:]), (e[:-1] + e[1:]) / 2)
        return mids, np.diff(e)

    @property
    def node_count(self):
        return self.nodes()[0].size


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    times: np.ndarray
    paths: np.ndarray
    seed: int
    method: str
    info: dict = field(default_factory=dict)

    @property
    def n_paths(self):
        return self.paths.shape[0]


def path_rng(seed, path):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(path,))))


def _edge_covariances(model, x_min, x_max):
    ex = model.exponent
    n = model.n
    K = model.re_aa
    S = ex.d_decomposition
    Y = solve_continuous_lyapunov(0.5 * np.eye(n) - ex.D, K)
    Pl = matfun.power_batch(S, [x_min], sign=-1)[0]
    low = 2 * x_min * Pl @ Y @ Pl.T
    Z = solve_continuous_lyapunov(0.5 * np.eye(n) + ex.D, K)
    Ph = matfun.power_batch(S, [x_max], sign=-1)[0]
    high = 2 * Ph @ Z @ Ph.T / x_max
    return _psd_root((low + low.T) / 2), _psd_root((high + high.T) / 2)


def _psd_root(C):
    w, V = np.linalg.eigh(C)
    return V * np.sqrt(np.clip(w, 0.0, None))


def simulate_spectral(model, times, n_paths, seed, freq=None, compensate=True):
    """Spectral-method sample paths on the given time grid."""
    times = np.asarray(times, dtype=float)
    n = model.n
    freq = freq or FrequencyGridSpec.for_grid(times)
    x, w = freq.nodes()
    G = matfun.power_batch(model.exponent.d_decomposition, x, sign=-1) @ model.spectral.A
    G = G * np.sqrt(w)[:, None, None]
    with np.errstate(invalid="ignore"):
        C = np.expm1(1j * np.outer(times, x)) / (1j * x[None, :])
    low, high = _edge_covariances(model, freq.x_min, freq.x_max)
    nonzero = times != 0
    J = x.size
    paths = np.zeros((n_paths, times.size, n))
    for start in range(0, n_paths, CHUNK):
        stop = min(n_paths, start + CHUNK)
        zeta = np.empty((stop - start, J, n), dtype=complex)
        extra = np.empty((stop - start, times.size + 2, n))
        for p in range(start, stop):
            rng = path_rng(seed, p)
            z = rng.standard_normal((J, n, 2)) / np.sqrt(2)
            zeta[p - start] = z[..., 0] + 1j * z[..., 1]
            extra[p - start] = rng.standard_normal((times.size + 2, n))
        Yj = (G[None] @ zeta[..., None])[..., 0]
        X = 2 * (C @ Yj).real
        if compensate:
            z_low = extra[:, 0] @ low.T
            xi0 = extra[:, 1] @ high.T
            xi = extra[:, 2:] @ high.T
            X += times[None, :, None] * z_low[:, None, :] + xi - xi0[:, None, :]
        X[:, ~nonzero] = 0.0
        paths[start:stop] = X
    info = {"x_min": freq.x_min, "x_max": freq.x_max, "per_decade": freq.per_decade,
            "dx": freq.dx, "nodes": int(J), "compensate": bool(compensate)}
    return PathEnsemble(times, paths, seed, "spectral", info)


def gram_matrix(model, times, config=None):
    """Covariance of (X(t_1), ..., X(t_m)) stacked time-major, shape (m n, m n)."""
    times = np.asarray(times, dtype=float)
    n, m = model.n, times.size
    G = np.zeros((m * n, m * n))
    for a in range(m):
        for b in range(a, m):
            c = cov(model, times[a], times[b], config=config)
            G[a * n:(a + 1) * n, b * n:(b + 1) * n] = c
            G[b * n:(b + 1) * n, a * n:(a + 1) * n] = c.T
    return (G + G.T) / 2


def _cholesky_with_jitter(G):
    scale = max(float(np.trace(G)), np.finfo(float).tiny)
    jitter = 0.0
    eye = np.eye(G.shape[0])
    while True:
        try:
            return np.linalg.cholesky(G + jitter * scale * eye), jitter
        except np.linalg.LinAlgError:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10
            if jitter > JITTER_CAP * (1 + 1e-9):
                raise CovarianceNotPsd(
                    f"Gram matrix is not positive semidefinite within {JITTER_CAP:g} * trace"
                ) from None


def simulate_cholesky(model, times, n_paths, seed, config=None):
    """Exact Gaussian sampling from the covariance on the grid (t = 0 is pinned to 0)."""
    times = np.asarray(times, dtype=float)
    n = model.n
    live = np.flatnonzero(times != 0)
    paths = np.zeros((n_paths, times.size, n))
    jitter = 0.0
    if live.size and n_paths:
        G = gram_matrix(model, times[live], config)
        if not np.any(G):
            L = np.zeros_like(G)
        else:
            L, jitter = _cholesky_with_jitter(G)
        draws = np.stack([path_rng(seed, p).standard_normal(G.shape[0]) for p in range(n_paths)])
        paths[:, live] = (draws @ L.T).reshape(n_paths, live.size, n)
    return PathEnsemble(times, paths, seed, "cholesky", {"jitter": jitter})


def _index(ens, t):
    hits = np.flatnonzero(np.isclose(ens.times, t, rtol=0, atol=1e-12))
    if hits.size == 0:
        raise GridMiss(f"time {t:g} is not on the ensemble grid")
    return int(hits[0])


def empirical_cov(ens, s, t):
    """Mean of X(s) X(t)^T over paths and its entrywise standard error."""
    i, j = _index(ens, s), _index(ens, t)
    n = ens.paths.shape[2]
    N = ens.n_paths
    if N == 0:
        return np.zeros((n, n)), np.zeros((n, n))
    prod = ens.paths[:, i, :, None] * ens.paths[:, j, None, :]
    mean = prod.mean(axis=0)
    se = prod.std(axis=0, ddof=1) / np.sqrt(N) if N > 1 else np.zeros((n, n))
    return mean, se


def increment_cross_cov(ens, a, b, c, d):
    """Empirical E (X(b) - X(a)) (X(d) - X(c))^T with standard errors."""
    idx = [_index(ens, v) for v in (a, b, c, d)]
    u = ens.paths[:, idx[1]] - ens.paths[:, idx[0]]
    v = ens.paths[:, idx[3]] - ens.paths[:, idx[2]]
    prod = u[:, :, None] * v[:, None, :]
    N = ens.n_paths
    return prod.mean(axis=0), prod.std(axis=0, ddof=1) / np.sqrt(N)


@dataclass(frozen=True)
class ScalingRow:
    c: float
    residual: float
    bound: float
    passed: bool


def self_similarity_report(model, base, scales, config=None, factor=10.0):
    """|cov(cs, ct) - c^H cov(s, t) c^{H^T}| with both sides integrated directly."""
    s, t = (float(v) for v in base)
    c0, e0 = cov(model, s, t, method="full", config=config, return_error=True)
    rows = []
    for c in scales:
        c = float(c)
        c1, e1 = cov(model, c * s, c * t, method="full", config=config, return_error=True)
        P = model.exponent.power(c)
        res = float(np.abs(c1 - P @ c0 @ P.T).max())
        bound = float((e1 + np.abs(P) @ e0 @ np.abs(P).T).max())
        floor = 1e-13 * max(1.0, float(np.abs(c1).max()))
        rows.append(ScalingRow(c, res, bound, res <= factor * max(bound, floor)))
    return rows

"""Verification suites: each returns rows of (name, value, threshold, passed)."""
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from . import covariance, fourier_check, matfun, model, simulate, spectrum
from .io import fixture_names, load_fixture
from .model import ExponentSpec, OfbmModel, SpectralParam


@dataclass(frozen=True)
class SuiteRow:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""


def _row(name, value, threshold, detail=""):
    value = float(value)
    return SuiteRow(name, value, float(threshold), bool(value <= threshold), detail)


def c2_squared(h):
    """C_2(h)^2 = pi / (h Gamma(2h) sin(h pi)), the variance of fBm at t = 1."""
    return math.pi / (h * gamma(2 * h) * math.sin(h * math.pi))


# ---------------------------------------------------------------------------
# random models


def random_exponent(rng, n, lo=0.05, hi=0.95, avoid=0.01, complex_prob=0.3):
    """Exponent with real parts of roots in (lo, hi) away from 1/2, and a well-conditioned basis.

    Complex pairs enter as real rotation blocks [[a, b], [-b, a]].
    """

    def real_part():
        while True:
            h = rng.uniform(lo, hi)
            if abs(h - 0.5) > avoid:
                return h

    blocks = []
    k = 0
    while k < n:
        if n - k >= 2 and rng.random() < complex_prob:
            a, b = real_part(), rng.uniform(0.05, 0.3)
            blocks.append(np.array([[a, b], [-b, a]]))
            k += 2
        else:
            blocks.append(np.array([[real_part()]]))
            k += 1
    J = np.zeros((n, n))
    k = 0
    for B in blocks:
        r = B.shape[0]
        J[k:k + r, k:k + r] = B
        k += r
    U = np.linalg.qr(rng.normal(size=(n, n)))[0]
    V = np.linalg.qr(rng.normal(size=(n, n)))[0]
    P = U @ np.diag(rng.uniform(0.7, 1.4, n)) @ V
    return ExponentSpec.from_matrix(P @ J @ np.linalg.inv(P))


def random_model(rng, n, **kw):
    ex = random_exponent(rng, n, **kw)
    return OfbmModel(ex, SpectralParam(rng.normal(size=(n, n)), rng.normal(size=(n, n))))


# ---------------------------------------------------------------------------
# suites


def suite_matfun(tol=1e-12, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    worst = 0.0
    for r in range(1, 5):
        for lam in (0.3, -0.2 + 0.4j, 1.7):
            for z in (0.2, 1.0, 7.5):
                got = matfun.jordan_block_apply(matfun.Power(z), matfun.JordanBlock(complex(lam), r))
                want = np.zeros((r, r), dtype=complex)
                for i in range(r):
                    for j in range(i + 1):
                        want[i, j] = z**lam * math.log(z) ** (i - j) / math.factorial(i - j)
                worst = max(worst, np.abs(got - want).max() / max(1.0, np.abs(want).max()))
    rows.append(_row("Jordan block power formula (sizes 1-4)", worst, tol))

    group, series = 0.0, 0.0
    exps = [load_fixture(name).exponent for name in fixture_names()]
    exps += [random_exponent(rng, int(rng.integers(1, 5))) for _ in range(10)]
    for ex in exps:
        S = ex.d_decomposition
        x, y = rng.uniform(0.1, 5.0, 2)
        px, py, pxy = matfun.power_batch(S, [x, y, x * y], sign=-1)
        group = max(group, np.abs(px @ py - pxy).max() / max(1.0, np.abs(pxy).max()))
        # exp(-log(x) D) summed as a power series
        L = -math.log(x) * ex.D
        term, total = np.eye(ex.n), np.eye(ex.n)
        for k in range(1, 80):
            term = term @ L / k
            total = total + term
        series = max(series, np.abs(total - px).max() / max(1.0, np.abs(px).max()))
    rows.append(_row("group law x^-D y^-D = (xy)^-D", group, 1e-10))
    rows.append(_row("power series of exp(-log(x) D)", series, 1e-10))
    return rows


def suite_conversion(tol=1e-12, seed=1, count=100):
    rng = np.random.default_rng(seed)
    trip, recon = 0.0, 0.0
    for _ in range(count):
        n = int(rng.integers(1, 5))
        ex = random_exponent(rng, n)
        A = SpectralParam(rng.normal(size=(n, n)), rng.normal(size=(n, n)))
        M = model.m_from_a(A, ex)
        B = model.a_from_m(M, ex)
        trip = max(trip, np.abs(B.A1 - A.A1).max(), np.abs(B.A2 - A.A2).max())
        aa = A.A @ A.A.conj().T
        recon = max(recon, np.abs(model.aa_star_from_m(M, ex) - aa).max() / max(1.0, np.abs(aa).max()))
    return [
        _row(f"A -> M -> A round trip ({count} models)", trip, tol),
        _row(f"AA* rebuilt from M ({count} models)", recon, 1e-10),
    ]


def suite_closed_form(tol=1e-6):
    rows = []
    for name, h in (("fbm_h030", 0.3), ("fbm_h050", 0.5), ("fbm_h070", 0.7)):
        V = covariance.variance_profile(load_fixture(name), 1.0)[0, 0]
        rows.append(_row(f"V(1) = C2({h})^2", abs(V / c2_squared(h) - 1), tol))
    m = load_fixture("rank_deficient_a")
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        V = covariance.variance_profile(m, t)
        want = c2_squared(0.7) * t**1.4 * np.eye(2)
        worst = max(worst, np.abs(V - want).max() / np.abs(want).max())
    rows.append(_row("rank-deficient A: V(t) = C2(0.7)^2 |t|^1.4 I", worst, tol))
    m = load_fixture("rotation_noise")
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        V = covariance.variance_profile(m, t)
        want = (4 + math.pi**2) * t * np.eye(2)
        worst = max(worst, np.abs(V - want).max() / np.abs(want).max())
    rows.append(_row("rotation noise: V(t) = (4 + pi^2) |t| I", worst, tol))
    return rows


def suite_scaling(tol=1e-6):
    rows = []
    for name in fixture_names():
        m = load_fixture(name)
        V1 = covariance.variance_profile(m, 1.0)
        worst = 0.0
        for c in (0.5, 2.0, 10.0):
            Vc = covariance.variance_profile(m, c)
            P = m.exponent.power(c)
            worst = max(worst, np.linalg.norm(Vc - P @ V1 @ P.T) / np.linalg.norm(Vc))
        rows.append(_row(f"{name}: V(c) = c^H V(1) c^H*", worst, tol))
    return rows


def suite_reversibility(tol=10.0):
    rows = []
    for name in fixture_names():
        m = load_fixture(name)
        probe = covariance.reversibility_probe(m, factor=tol)
        flag = model.check_time_reversible(m)
        agree = probe.symmetric == flag
        detail = f"flag={flag} probe_symmetric={probe.symmetric} gap={probe.gap:.3g} bound={probe.bound:.3g}"
        rows.append(SuiteRow(f"{name}: flag matches cov(s,t) vs cov(t,s)", 0.0 if agree else 1.0, 0.0,
                             agree, detail))
    m = load_fixture("rotation_noise")
    rows.append(SuiteRow("rotation noise detected irreversible", 0.0, 0.0,
                         not model.check_time_reversible(m)))
    return rows


PLANCHEREL_PAIRS = ((1.0, 2.0), (0.5, -0.7), (1.3, 1.3), (-1.0, -2.5))


def suite_plancherel(tol=1e-6, appendix_tol=1e-5):
    rows = []
    for name in fixture_names():
        m = load_fixture(name)
        try:
            ev = fourier_check.KernelEvaluator.from_model(m)
        except model.ValidationError:
            continue
        worst = 0.0
        for s, t in PLANCHEREL_PAIRS:
            a = fourier_check.plancherel_covariance(ev, s, t)
            b = covariance.cov(m, s, t, method="full")
            scale = max(np.abs(b).max(), np.abs(covariance.variance_profile(m, 1.0)).max())
            worst = max(worst, np.abs(a - b).max() / scale)
        rows.append(_row(f"{name}: time-domain vs spectral covariance ({ev.family})", worst, tol))
    for r in appendix_b_rows(appendix_tol):
        rows.append(r)
    return rows


def appendix_b_rows(tol=1e-5):
    rows = []
    for r in fourier_check.appendix_b_suite(tol):
        gap = float(np.max(np.abs(np.asarray(r.value) - np.asarray(r.expected))))
        rows.append(_row(f"{r.label} {r.args}", gap, tol))
    return rows


def suite_dichotomy(seed=2, count=50, tol=1e-4):
    rng = np.random.default_rng(seed)
    ambiguous = 0
    labels_ok = True
    models = []
    for _ in range(count):
        n = int(rng.integers(1, 5))
        m = random_model(rng, n, lo=0.55, hi=0.95, avoid=0.0)
        models.append(m)
        try:
            rep = spectrum.dichotomy_classify(m)
        except spectrum.AmbiguousEntry:
            ambiguous += 1
            continue
        labels_ok &= all(v in (spectrum.DIVERGES, spectrum.ZERO) for v in rep.labels.ravel())
    rows = [SuiteRow(f"{count} random long-range models classified", float(ambiguous), 0.0,
                     ambiguous == 0 and labels_ok)]
    m = OfbmModel.spectral_model(ExponentSpec.from_matrix(np.diag([0.6, 0.8, 0.7])), np.diag([1.0, 2.0, 0.5]))
    rep = spectrum.dichotomy_classify(m)
    want = np.where(np.eye(3, dtype=bool), spectrum.DIVERGES, spectrum.ZERO)
    ok = bool(np.all(rep.labels == want))
    rows.append(SuiteRow("diagonal AA*, diagonal D: off-diagonal entries ZERO", 0.0 if ok else 1.0, 0.0, ok))
    worst = 0.0
    for m in [load_fixture(name) for name in ("fbm_h070", "opposite_roots", "jordan_half")] + models[:3]:
        I, _ = spectrum.dt_integral(m)
        V = covariance.variance_profile(m, 1.0)
        worst = max(worst, np.abs(I - V).max() / np.abs(V).max())
    rows.append(_row("int g over [-pi, pi] equals V(1)", worst, tol))
    return rows


MC_TIMES = np.array([0.0, 0.5, 1.0])


def suite_montecarlo(n_paths=10_000, seed=20240501, z=4.0):
    rows = []
    for name in fixture_names():
        m = load_fixture(name)
        ens = simulate.simulate_spectral(m, MC_TIMES, n_paths, seed)
        C, se = simulate.empirical_cov(ens, 1.0, 1.0)
        V = covariance.variance_profile(m, 1.0)
        score = float((np.abs(C - V) / np.maximum(se, 1e-300)).max())
        rows.append(_row(f"{name}: empirical cov(1,1) vs V(1) (in standard errors)", score, z))
        if name == "obm_2d":
            X, xse = simulate.increment_cross_cov(ens, 0.0, 0.5, 0.5, 1.0)
            rows.append(_row("obm_2d: disjoint increments uncorrelated (in standard errors)",
                             float((np.abs(X) / xse).max()), z))
    m = load_fixture("opposite_roots")
    a = simulate.simulate_spectral(m, MC_TIMES, 64, seed)
    b = simulate.simulate_spectral(m, MC_TIMES, 64, seed)
    same = a.paths.tobytes() == b.paths.tobytes()
    rows.append(SuiteRow("identical seeds give identical bytes", 0.0 if same else 1.0, 0.0, same))
    return rows


SUITES = {
    "matfun": suite_matfun,
    "conversion": suite_conversion,
    "closed-form": suite_closed_form,
    "scaling": suite_scaling,
    "reversibility": suite_reversibility,
    "plancherel": suite_plancherel,
    "appendix-b": appendix_b_rows,
    "dichotomy": suite_dichotomy,
    "montecarlo": suite_montecarlo,
}


def run_suite(name, tol=None):
    """Run a suite by name; returns (rows, seconds)."""
    fn = SUITES[name]
    start = time.perf_counter()
    rows = fn() if tol is None else fn(tol=tol)
    return rows, time.perf_counter() - start

import math

import numpy as np
import pytest

from ofbm import covariance, simulate
from ofbm.errors import CovarianceNotPsd, GridMiss

TIMES = np.array([0.0, 0.5, 1.0])


def test_frequency_grid_defaults():
    f = simulate.FrequencyGridSpec.for_grid([0.5, 1.0, 2.0])
    assert f.x_min == pytest.approx(1e-6 / 2) and f.x_max == pytest.approx(400.0)
    assert f.dx == pytest.approx(0.025)
    x, w = f.nodes()
    assert w.sum() == pytest.approx(f.x_max - f.x_min)
    assert np.all(np.diff(x) > 0) and x[0] > f.x_min and x[-1] < f.x_max


def test_frequency_grid_override_and_validation():
    assert simulate.FrequencyGridSpec.for_grid([1.0], x_max=50.0).x_max == 50.0
    with pytest.raises(ValueError):
        simulate.FrequencyGridSpec(1.0, 0.5)


def test_spectral_shapes_and_zero_pin(fixtures):
    ens = simulate.simulate_spectral(fixtures["opposite_roots"], TIMES, 5, seed=1)
    assert ens.paths.shape == (5, 3, 2)
    assert np.all(ens.paths[:, 0] == 0)
    assert ens.info["nodes"] > 0 and ens.method == "spectral"


def test_paths_do_not_depend_on_ensemble_size(fixtures):
    m = fixtures["fbm_h070"]
    a = simulate.simulate_spectral(m, TIMES, 3, seed=9)
    b = simulate.simulate_spectral(m, TIMES, simulate.CHUNK + 4, seed=9)
    assert np.array_equal(a.paths, b.paths[:3])
    c = simulate.simulate_spectral(m, TIMES, 3, seed=10)
    assert not np.array_equal(a.paths, c.paths)


def test_cholesky_deterministic_and_pinned(fixtures):
    m = fixtures["rotation_noise"]
    a = simulate.simulate_cholesky(m, TIMES, 4, seed=3)
    b = simulate.simulate_cholesky(m, TIMES, 4, seed=3)
    assert a.paths.tobytes() == b.paths.tobytes()
    assert np.all(a.paths[:, 0] == 0)


def test_gram_matrix_blocks(fixtures):
    m = fixtures["opposite_roots"]
    G = simulate.gram_matrix(m, [0.5, 1.0])
    assert np.allclose(G[2:, 2:], covariance.variance_profile(m, 1.0))
    assert np.allclose(G[:2, 2:], covariance.cov(m, 0.5, 1.0))


def test_jitter_cap():
    with pytest.raises(CovarianceNotPsd):
        simulate._cholesky_with_jitter(np.array([[1.0, 0.0], [0.0, -1.0]]))
    L, jitter = simulate._cholesky_with_jitter(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert 0 < jitter <= simulate.JITTER_CAP


@pytest.mark.parametrize("name", ["fbm_h030", "fbm_h070", "opposite_roots", "jordan_half"])
def test_spectral_moments(fixtures, name):
    m = fixtures[name]
    ens = simulate.simulate_spectral(m, TIMES, 3000, seed=11)
    C, se = simulate.empirical_cov(ens, 1.0, 1.0)
    V = covariance.variance_profile(m, 1.0)
    assert np.all(np.abs(C - V) <= 4.5 * se)


def test_cholesky_moments(fixtures):
    m = fixtures["opposite_roots"]
    ens = simulate.simulate_cholesky(m, TIMES, 3000, seed=12)
    C, se = simulate.empirical_cov(ens, 0.5, 1.0)
    assert np.all(np.abs(C - covariance.cov(m, 0.5, 1.0)) <= 4.5 * se)


def test_edge_compensation_restores_mass(fixtures):
    # compensated variance of the increment X(1) - X(0.5) at a coarse grid is closer to truth
    m = fixtures["fbm_h030"]
    f = simulate.FrequencyGridSpec(1e-3, 20.0)
    V = covariance.variance_profile(m, 1.0)[0, 0]
    on = simulate.simulate_spectral(m, TIMES, 4000, seed=4, freq=f)
    off = simulate.simulate_spectral(m, TIMES, 4000, seed=4, freq=f, compensate=False)
    err_on = abs(simulate.empirical_cov(on, 1.0, 1.0)[0][0, 0] - V)
    err_off = abs(simulate.empirical_cov(off, 1.0, 1.0)[0][0, 0] - V)
    assert err_on < err_off


def test_obm_disjoint_increments(fixtures):
    ens = simulate.simulate_spectral(fixtures["obm_2d"], TIMES, 3000, seed=5)
    X, se = simulate.increment_cross_cov(ens, 0.0, 0.5, 0.5, 1.0)
    assert np.all(np.abs(X) <= 4.5 * se)


def test_grid_miss_and_empty(fixtures):
    ens = simulate.simulate_spectral(fixtures["fbm_h050"], TIMES, 0, seed=1)
    C, se = simulate.empirical_cov(ens, 1.0, 1.0)
    assert np.all(C == 0) and np.all(se == 0)
    with pytest.raises(GridMiss):
        simulate.empirical_cov(ens, 0.75, 1.0)


def test_self_similarity_report(fixtures):
    rows = simulate.self_similarity_report(fixtures["jordan_half"], (0.5, 1.0), [0.5, 2.0, 10.0])
    assert all(r.passed for r in rows)
    assert math.isfinite(rows[0].residual)

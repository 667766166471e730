import math

import numpy as np
import pytest
from scipy import integrate

from relpot.envelopes import env_exit_interval
from relpot.errors import DomainError
from relpot.kernels import Domain, green_gauss, transition_density
from relpot.montecarlo import (Cells, estimate_exit_law, estimate_green, estimate_mean_exit, estimate_survival,
                               run_batch, sample_displacements, simulate_path)
from relpot.subordinator import McConfig, ProcessParams, subordinator_laplace

A1 = ProcessParams(1.0, 1.0, 1)


@pytest.mark.parametrize("alpha,m", [(1.2, 1.0), (0.5, 0.0), (1.0, 1.0), (1.5, 1.0)])
def test_one_step_characteristic_function(alpha, m):
    p = ProcessParams(alpha, m, 2)
    cfg = McConfig(n_samples=1_000_000, dt=0.1, master_seed=3)
    z = sample_displacements(1, p, cfg)[:, 0]
    c = np.cos(z)
    exact = math.exp(m * 0.1 - 0.1 * (1 + p.tilt_rate) ** (alpha / 2))
    # the Gaussian mixture gives E cos = E exp(-T) = Laplace transform at 1
    assert exact == pytest.approx(subordinator_laplace(1.0, 0.1, p), rel=1e-14)
    assert abs(c.mean() - exact) < 4 * c.std() / math.sqrt(c.size)


def test_cauchy_tail_probability():
    p = ProcessParams(1.0, 0.0, 1)
    cfg = McConfig(n_samples=200_000, dt=0.1, master_seed=5)
    x = sample_displacements(10, p, cfg)[:, 0]
    est = np.mean(np.abs(x) > 1)
    inside, _ = integrate.quad(lambda v: transition_density(1.0, v, p), -1, 1, epsabs=1e-12)
    assert abs(est - (1 - inside)) < 4 * math.sqrt(est * (1 - est) / x.size)


def test_simulate_path_zero_horizon():
    path = simulate_path(0.7, 0.0, A1, McConfig(), np.random.default_rng(0))
    assert path.states.shape == (1, 1) and path.states[0, 0] == 0.7 and path.exit_index is None


def test_simulate_path_exit_index():
    path = simulate_path(0.5, 20.0, A1, McConfig(), np.random.default_rng(1), domain=Domain.interval(1.0))
    k = path.exit_index
    assert k is not None and not 0 < path.states[k, 0] < 1
    assert np.all((path.states[:k, 0] > 0) & (path.states[:k, 0] < 1))


def test_survival_deep_interior():
    est = estimate_survival(1000.0, 1.0, Domain.halfline(), A1, McConfig(n_samples=20_000))
    assert est.value > 0.99


def test_survival_monotone_in_t():
    res = run_batch([1.0], Domain.halfline(), A1, McConfig(n_samples=20_000), 16.0)
    s = [res.survival(t, 0) for t in (1.0, 2.0, 4.0, 8.0, 16.0)]
    for a, b in zip(s, s[1:]):
        assert b.value <= a.value + 3 * a.std_error


def test_survival_beyond_horizon_rejected():
    res = run_batch([1.0], Domain.halfline(), A1, McConfig(n_samples=100), 1.0)
    with pytest.raises(DomainError):
        res.survival(2.0, 0)


def test_start_outside_rejected():
    with pytest.raises(DomainError):
        estimate_survival(-1.0, 1.0, Domain.halfline(), A1, McConfig(n_samples=100))


def test_dt_too_large_for_mass():
    with pytest.raises(DomainError):
        estimate_survival(1.0, 1.0, Domain.halfline(), ProcessParams(1.0, 10.0), McConfig(n_samples=100, dt=0.5))


def test_mean_exit_brownian_lower_bound_ball():
    p = ProcessParams(1.0, 1.0, 2)
    est = estimate_mean_exit([0.0, 0.0], Domain.ball(5.0, 2), p, McConfig(n_samples=20_000), refine=False)
    assert est.value >= 25.0 / 2 - 3 * est.std_error


def test_mean_exit_stable_shape():
    # m = 0, alpha = 1: E tau of (-1, 1) is proportional to (1 - x^2)^{1/2}
    p = ProcessParams(1.0, 0.0, 1)
    xs = np.array([0.2, 0.4, 0.6, 0.8])
    res = run_batch(1 + xs, Domain.interval(2.0), p, McConfig(n_samples=20_000, dt=0.005), 40.0)
    ratios = [res.mean_exit(k).value / math.sqrt(1 - x * x) for k, x in enumerate(xs)]
    assert max(ratios) / min(ratios) < 1.15


def test_mean_exit_refined_run_attached():
    est = estimate_mean_exit(1.0, Domain.interval(2.0), A1, McConfig(n_samples=10_000))
    assert est.refined is not None and est.refined.n == 1000
    assert abs(est.refined.value - est.value) < 0.1 * est.value


def test_mean_exit_band_over_R():
    ratios = []
    for R in (0.5, 2.0, 8.0):
        est = estimate_mean_exit(R / 2, Domain.interval(R), A1, McConfig(n_samples=4096), refine=False)
        ratios.append(est.value / env_exit_interval(R / 2, R, A1))
    assert max(ratios) / min(ratios) < 20


def test_mean_exit_needs_bounded_domain():
    with pytest.raises(DomainError):
        estimate_mean_exit(1.0, Domain.halfline(), A1, McConfig(n_samples=100))


@pytest.mark.parametrize("dt_pair", [(0.1, 0.05), (0.05, 0.025)])
def test_monitoring_bias_direction(dt_pair):
    coarse, fine = (estimate_mean_exit(1.0, Domain.interval(2.0), A1, McConfig(n_samples=50_000, dt=dt),
                                       refine=False) for dt in dt_pair)
    assert fine.value < coarse.value + 2 * math.hypot(fine.std_error, coarse.std_error)
    s_coarse, s_fine = (estimate_survival(0.5, 4.0, Domain.halfline(), A1, McConfig(n_samples=50_000, dt=dt))
                        for dt in dt_pair)
    assert s_fine.value < s_coarse.value + 2 * math.hypot(s_fine.std_error, s_coarse.std_error)


def test_monitoring_bias_overall_trend():
    e = [estimate_mean_exit(1.0, Domain.interval(2.0), A1, McConfig(n_samples=50_000, dt=dt), refine=False)
         for dt in (0.1, 0.025)]
    assert e[1].value < e[0].value - 3 * math.hypot(e[0].std_error, e[1].std_error)


def test_green_occupation_identity():
    cells = Cells.uniform(0.0, 2.0, 40)
    cfg = McConfig(n_samples=20_000)
    vals, se, res = estimate_green(1.0, Domain.interval(2.0), cells, A1, cfg)
    total = float(np.sum(vals) * cells.volume)
    mean_exit = res.mean_exit(0).value
    assert abs(total / mean_exit - 1) < 0.01


def test_green_brownian_lower_bound():
    dom = Domain.interval(8.0)
    cells = Cells.uniform(0.0, 8.0, 80)
    vals, se, _ = estimate_green(4.0, dom, cells, A1, McConfig(n_samples=20_000))
    centres = cells.centers()[:, 0]
    bound = 2 * green_gauss(dom, 4.0, centres)
    assert np.all(vals + 3 * se >= bound * (1 - 0.05 * (np.abs(centres - 4) < 0.1)))


def test_green_symmetry():
    # starts in one batch share increments, so use independent streams
    dom = Domain.interval(4.0)
    cells = Cells.uniform(0.0, 4.0, 40)
    cfg = McConfig(n_samples=40_000)
    r0 = run_batch([1.05], dom, A1, cfg, 850.0, cells=cells, stream=0)
    r1 = run_batch([2.95], dom, A1, cfg, 850.0, cells=cells, stream=1)
    v0, s0 = r0.green_cells(0)
    v1, s1 = r1.green_cells(0)
    i, j = cells.index(2.95), cells.index(1.05)
    assert abs(v0[i] - v1[j]) < 3 * math.hypot(s0[i], s1[j])


def test_green_unbounded_needs_horizon():
    with pytest.raises(DomainError):
        estimate_green(1.0, Domain.halfline(), Cells.uniform(0, 4, 4), A1, McConfig(n_samples=100))


def test_exit_law_total_and_boundary():
    dom = Domain.interval(2.0)
    cfg = McConfig(n_samples=20_000)
    total = estimate_exit_law(1.0, dom, lambda y: not 0 < y[0] < 2, A1, cfg)
    assert total.value == 1.0
    on_boundary = estimate_exit_law(1.0, dom, lambda y: y[0] in (0.0, 2.0), A1, cfg)
    assert on_boundary.value == 0.0


def test_exit_law_target_must_be_outside():
    with pytest.raises(DomainError):
        estimate_exit_law(1.0, Domain.interval(2.0), (1.5, 3.0), A1, McConfig(n_samples=100))


def test_determinism_and_worker_independence():
    cfg = McConfig(n_samples=3 * 4096 + 17, master_seed=9)
    cells = Cells.uniform(0.0, 2.0, 10)
    one = run_batch([0.5, 1.0], Domain.interval(2.0), A1, cfg, 20.0, cells=cells)
    again = run_batch([0.5, 1.0], Domain.interval(2.0), A1, cfg, 20.0, cells=cells)
    two = run_batch([0.5, 1.0], Domain.interval(2.0), A1, cfg.with_(workers=2), 20.0, cells=cells)
    for other in (again, two):
        assert np.array_equal(one.exit_step, other.exit_step)
        assert np.array_equal(one.exit_pos, other.exit_pos)
        assert np.array_equal(one.occ_sum, other.occ_sum)


def test_seeds_and_streams_differ():
    cfg = McConfig(n_samples=500)
    a = run_batch([1.0], Domain.interval(2.0), A1, cfg, 20.0).exit_step
    b = run_batch([1.0], Domain.interval(2.0), A1, cfg.with_(master_seed=1), 20.0).exit_step
    c = run_batch([1.0], Domain.interval(2.0), A1, cfg, 20.0, stream=1).exit_step
    assert not np.array_equal(a, b) and not np.array_equal(a, c)


def test_cells_indexing():
    cells = Cells.uniform([0.0, -1.0], [2.0, 1.0], [4, 2])
    assert cells.size == 8 and cells.volume == pytest.approx(0.5)
    assert cells.index([0.6, 0.5]) == 1 * 2 + 1
    assert cells.index([3.0, 0.0]) == -1
    assert np.allclose(cells.centers()[3], [0.75, 0.5])

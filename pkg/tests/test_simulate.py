import importlib
import math

import numpy as np
import pytest
from scipy import stats
from scipy.optimize import minimize

from gothawkes.core import HawkesModel, branching_matrix, expected_counts
from gothawkes.estimate import FitConfig, time_rescaled_residuals
from gothawkes.exceptions import InstabilityError, SamplerExhausted, ValidationError
from gothawkes.simulate import (
    StudyConfig,
    StudyReport,
    StudyRow,
    example_team_model,
    replication_seeds,
    run_accuracy_study,
    sample_study_model,
    score_estimate,
    simulate,
)

import oracles

sim = importlib.import_module("gothawkes.simulate")


def test_poisson_reduction():
    lam, T, R = 0.05, 2000.0, 1000
    m = HawkesModel([lam], [[0.0]], [[1.0]])
    counts = oracles.monte_carlo_counts(m, T, R, seed0=0)[:, 0]
    assert abs(counts.mean() - lam * T) <= 3 * math.sqrt(lam * T / R)


def test_univariate_mean_count_matches_expected_counts():
    m = HawkesModel([0.02], [[0.5]], [[1.0]])
    T = 3000.0
    exact = expected_counts(m, branching_matrix(m), T)[0]
    assert exact == pytest.approx(0.02 * T / 0.5)
    counts = oracles.monte_carlo_counts(m, T, 1000, seed0=5000)[:, 0]
    assert abs(counts.mean() - exact) <= 3 * counts.std(ddof=1) / math.sqrt(counts.size)


def test_deterministic_given_seed():
    m = example_team_model()
    a = simulate(m, 5400.0, 42)
    b = simulate(m, 5400.0, 42)
    assert a.to_json() == b.to_json()
    assert simulate(m, 5400.0, 43).to_json() != a.to_json()


def test_trajectory_invariants():
    t = simulate(example_team_model(), 20_000.0, 1)
    assert np.all(np.diff(t.times) > 0)
    assert t.times[0] > 0 and t.times[-1] <= t.horizon
    assert t.marks.min() >= 0 and t.marks.max() < 12


def test_no_baseline_gives_empty_trajectory():
    t = simulate(HawkesModel([0.0, 0.0], [[0.2, 0.0], [0.0, 0.2]], np.ones((2, 2))), 100.0, 0)
    assert len(t) == 0 and t.horizon == 100.0


def test_refuses_unstable_models():
    with pytest.raises(InstabilityError):
        simulate(HawkesModel([0.1], [[1.2]], [[1.0]]), 10.0, 0)
    with pytest.raises(ValidationError):
        simulate(HawkesModel([0.1], [[0.2]], [[1.0]]), 0.0, 0)


def test_cross_correlogram_decays_at_beta():
    beta = 1.0
    m = HawkesModel([0.5, 0.01], [[0.0, 0.0], [0.9, 0.0]], np.full((2, 2), beta))
    t = simulate(m, 5500.0, 0)
    assert len(t) >= 5000
    src, dst = t.dimension(0), t.dimension(1)
    edges = np.arange(0.0, 12.0001, 0.25)
    hist = np.zeros(edges.size - 1)
    for s in src:
        lag = dst[(dst > s) & (dst <= s + edges[-1])] - s
        hist += np.histogram(lag, edges)[0]
    lo, hi = edges[:-1], edges[1:]

    # Poisson fit of flat background plus exponential bump; the bin counts are the data
    def nll(p):
        base, amp, rate = np.exp(p)
        mean = base * (hi - lo) + amp * (np.exp(-rate * lo) - np.exp(-rate * hi))
        return np.sum(mean - hist * np.log(mean))

    start = np.log([hist[-8:].mean() / 0.25, hist[0] / 0.25, 0.5])
    p = minimize(nll, start, method="Nelder-Mead",
                 options=dict(xatol=1e-8, fatol=1e-8, maxiter=4000)).x
    assert np.exp(p[2]) == pytest.approx(beta, rel=0.10)


def test_time_rescaled_residuals_are_unit_exponential():
    m = example_team_model()
    t = simulate(m, 200_000.0, 9)
    res = time_rescaled_residuals(m, t)
    assert res.size >= 10_000
    assert stats.kstest(res, "expon").pvalue > 0.01


# ---------------------------------------------------------------- study sampler

def test_sampler_zero_fraction_and_nonzero_mean():
    A = np.array([sample_study_model(s).alpha for s in range(10_000)])
    assert (A == 0).mean() == pytest.approx(0.40, abs=0.01)
    analytic = 1 / 0.4 / 40
    assert oracles.zero_truncated_geometric_mean(0.4) / 40 == pytest.approx(analytic, abs=1e-12)
    assert A[A > 0].mean() == pytest.approx(analytic, abs=0.002)


def test_sampler_ranges_and_shape():
    for s in range(200):
        m = sample_study_model(s)
        assert m.d == 12
        assert np.all((m.mu >= 0.006) & (m.mu <= 0.01))
        assert np.all(m.beta == m.beta[0, 0]) and 0.5 <= m.beta[0, 0] <= 1.0
        assert np.allclose(m.alpha * 40, np.round(m.alpha * 40))
        assert branching_matrix(m).spectral_radius < 0.95


def test_sampler_deterministic():
    assert sample_study_model(5) == sample_study_model(5)


def test_sampler_exhausted(monkeypatch):
    monkeypatch.setattr(sim, "MAX_STUDY_RADIUS", 0.0)
    with pytest.raises(SamplerExhausted):
        sample_study_model(0)


# ---------------------------------------------------------------- scoring and study

def test_score_estimate_by_hand():
    true = np.array([[0.1, 0.0], [0.2, 0.0]])
    hat = np.array([[0.0, 0.03], [0.25, 0.0]])
    null = hat == 0
    s = score_estimate(true, hat, null)
    assert s["false_positive"] == 0.5
    assert s["false_negative_error"] == pytest.approx(0.03)
    assert s["wmape"] == pytest.approx((0.1 + 0.05) / 0.3)


def test_score_estimate_no_missed_nulls_is_nan():
    true = np.array([[0.1, 0.0]])
    assert math.isnan(score_estimate(true, true, true == 0)["false_negative_error"])


def test_replication_seeds_distinct_and_reproducible():
    a = replication_seeds(0, 4, 20)
    assert a.shape == (4, 20) and np.unique(a).size == 80
    np.testing.assert_array_equal(a, replication_seeds(0, 4, 20))
    assert not np.array_equal(a, replication_seeds(1, 4, 20))


def test_study_config_validation():
    with pytest.raises(ValidationError):
        StudyConfig(horizons=())
    with pytest.raises(ValidationError):
        StudyConfig(replications=0)
    with pytest.raises(ValidationError):
        StudyConfig(sampler="uniform")


def test_study_is_deterministic_and_well_formed():
    cfg = StudyConfig(horizons=(60, 120), replications=2, seed=3,
                      fit_config=FitConfig(refine_iters=5))
    a, b = run_accuracy_study(cfg), run_accuracy_study(cfg)
    assert a == b
    assert [r.horizon_min for r in a.rows] == [60.0, 120.0]
    for r in a.rows:
        assert 0 <= r.false_positive <= 1 and r.false_negative_error >= 0 and r.wmape >= 0
        assert r.failures == 0 and r.replications == 2
    lines = a.to_csv().splitlines()
    assert lines[0] == "horizon_min,false_positive,false_negative_error,wmape,failures"
    assert lines[1].startswith("60,") and len(lines) == 3


def test_study_counts_failed_replications(monkeypatch):
    calls = {"n": 0}

    def flaky(seed):
        calls["n"] += 1
        if calls["n"] % 2:
            raise RuntimeError("boom")
        return sample_study_model(seed)

    monkeypatch.setitem(sim.SAMPLERS, "geometric40", flaky)
    rep = run_accuracy_study(StudyConfig(horizons=(60,), replications=4,
                                         fit_config=FitConfig(refine_iters=3)))
    assert rep.rows[0].failures == 2 and rep.rows[0].replications == 2


def test_report_table_has_footer():
    rep = StudyReport((StudyRow(300.0, 0.011, 0.0083, 0.257, 0),))
    table = rep.to_table()
    assert "300" in table and "1.1%" in table and "25.7%" in table
    assert "not declared null" in table.splitlines()[-1]


def test_example_team_model_is_stable_and_threat_row_is_set():
    m = example_team_model()
    K = branching_matrix(m)
    assert K.spectral_radius < 0.95
    assert K.K[11, 10] == pytest.approx(0.16)
    assert K.K[11, :11].sum() == pytest.approx(0.44)

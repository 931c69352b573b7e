from __future__ import annotations

import math

import numpy as np
import pytest

from fullmed.config import MediatorKind, TestKind
from fullmed.errors import ArgumentError
from fullmed.estimators import EngineParams
from fullmed.simulation import (
    DgpConfig,
    McReport,
    ReplicationResult,
    beta_schedule,
    covariate_covariance,
    gen_covariates,
    run_monte_carlo,
    simulate,
    summarize,
)


def test_covariance_entries():
    sigma = covariate_covariance(4)
    assert sigma[0, 0] == 1.0
    assert sigma[0, 1] == 0.5
    assert sigma[1, 3] == 0.25
    assert np.allclose(sigma, sigma.T)


def test_beta_schedule():
    assert np.allclose(beta_schedule(3), [0.5, 0.125, 0.5 / 9])


def test_covariates_follow_the_covariance():
    x = gen_covariates(100_000, 3, np.random.default_rng(0))
    assert np.allclose(np.cov(x, rowvar=False), covariate_covariance(3), atol=0.02)


def test_treatment_is_balanced():
    data = simulate(DgpConfig(n=20_000, p=50, seed=2))
    assert abs(data.d.mean() - 0.5) < 0.02
    assert data.x.shape == (20_000, 50)
    assert data.m.shape == (20_000, 1)


def test_direct_effect_is_recovered_by_regression():
    gamma = 0.4
    data = simulate(DgpConfig(n=100_000, p=3, gamma=gamma, seed=8))
    design = np.column_stack([np.ones(data.n), data.d, data.m, data.x])
    coef, *_ = np.linalg.lstsq(design, data.y, rcond=None)
    assert coef[1] == pytest.approx(gamma, abs=0.03)
    assert coef[2] == pytest.approx(1.0, abs=0.02)


def test_binary_mediator_design():
    data = simulate(DgpConfig(n=500, p=4, dgp=2, lam=0.5, mediator=MediatorKind.BINARY))
    assert set(np.unique(data.m)) <= {0.0, 1.0}


def test_simulate_is_reproducible():
    config = DgpConfig(n=50, p=4, delta=0.5, seed=12)
    assert np.array_equal(simulate(config).y, simulate(config).y)
    assert not np.array_equal(simulate(config).y, simulate(config.with_seed(13)).y)


@pytest.mark.parametrize(
    "kwargs",
    [{"n": 5}, {"p": 0}, {"dgp": 3}, {"dgp": 1, "lam": 0.5}],
)
def test_dgp_config_validation(kwargs):
    with pytest.raises(ArgumentError):
        DgpConfig(**kwargs)


def test_summarize_excludes_failures():
    results = [
        ReplicationResult(index=2, theta=0.3, se=0.1, p_value=0.01, n_effective=90),
        ReplicationResult(index=0, theta=0.1, se=0.1, p_value=0.50, n_effective=100),
        ReplicationResult(index=1, error="trimmed away"),
    ]
    report = summarize(results, alpha=0.05)
    assert report.reps_completed == 2
    assert report.reps_failed == 1
    assert report.rejection_rate == 0.5
    assert report.mean_theta == pytest.approx(0.2)
    assert report.failures == [(1, "trimmed away")]


def test_summarize_without_successes():
    report = summarize([ReplicationResult(index=0, error="boom")], alpha=0.05)
    assert math.isnan(report.rejection_rate)


def test_markdown_row():
    report = McReport(0.01, 0.02, 0.03, 0.05, 10, 0, 95.0, 0.05)
    row = report.markdown_row(DgpConfig(dgp=2, lam=0.5, delta=0.1))
    assert row.startswith("| dgp2 delta=0.1 gamma=0 lambda=0.5 | 1000 |")
    assert McReport.markdown_header().count("|") == row.count("|") + 8


def test_monte_carlo_does_not_depend_on_workers():
    config = DgpConfig(n=120, p=3, seed=5)
    params = EngineParams(folds=3)
    serial = run_monte_carlo(config, reps=3, params=params, threads=1)
    parallel = run_monte_carlo(config, reps=3, params=params, threads=2)
    assert serial.to_dict() == parallel.to_dict()
    assert serial.reps_completed + serial.reps_failed == 3


def test_bdfd_needs_binary_mediator_design():
    with pytest.raises(ArgumentError):
        run_monte_carlo(DgpConfig(n=50, p=2), reps=1, test=TestKind.BDFD)


def _mc(reps: int, **design) -> McReport:
    return run_monte_carlo(DgpConfig(p=50, seed=1, **design), reps=reps, threads=8)


@pytest.mark.slow
def test_size_under_the_joint_null():
    assert 0.02 <= _mc(500, n=1000).rejection_rate <= 0.09


@pytest.mark.slow
def test_power_against_mediator_endogeneity():
    report = _mc(300, n=1000, delta=0.25)
    assert report.rejection_rate >= 0.90
    assert 0.45 <= report.mean_theta <= 0.70


@pytest.mark.slow
def test_power_against_direct_effects():
    assert _mc(200, n=4000, gamma=0.2).rejection_rate >= 0.95
    assert 0.30 <= _mc(200, n=1000, gamma=0.2).rejection_rate <= 0.75


@pytest.mark.slow
def test_treatment_mediator_confounding_is_not_detected():
    assert _mc(500, n=1000, dgp=2, lam=0.25).rejection_rate <= 0.09


@pytest.mark.slow
def test_power_with_confounding_and_endogeneity():
    report = _mc(200, n=1000, dgp=2, lam=0.25, delta=1.0)
    assert report.rejection_rate >= 0.99
    assert report.mean_n_effective < 1000

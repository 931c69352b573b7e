from __future__ import annotations

import numpy as np
import pytest
from conftest import mediation_population

from fullmed.config import MediatorKind, TestKind, ZetaMode
from fullmed.data import TrimRule, make_folds
from fullmed.errors import ArgumentError
from fullmed.estimators import EngineParams, estimate_bdfd, nested_mean, r_term, run_test, s_term, zeta
from fullmed.estimators.bdfd_test import bdfd_scores
from fullmed.estimators.ci_test import estimate
from fullmed.estimators.partition import TreatmentPartition
from fullmed.learners.base import LearnerSpec
from fullmed.oracle import (
    DiscretePopulation,
    check_bdfd,
    check_ti,
    marginalize,
    random_population,
    sample,
    support_dataset,
    true_bdfd_nuisances,
    true_nuisances,
    true_theta,
    true_theta_bar,
)
from fullmed.simulation import DgpConfig, simulate


def test_observed_front_door_target_is_zero(rng):
    for _ in range(20):
        pop = random_population(rng, sizes=(3, 3, 2, 2))
        assert abs(true_theta_bar(pop, ZetaMode.OBSERVED)) < 1e-12


def test_integrated_target_vanishes_under_mediation(rng):
    for _ in range(20):
        pop = random_population(rng, sizes=(3, 2, 3, 2), structure="mediation")
        assert abs(true_theta_bar(pop, ZetaMode.INTEGRATED)) < 1e-12


def test_integrated_target_detects_direct_effects(rng):
    values = [true_theta_bar(random_population(rng), ZetaMode.INTEGRATED) for _ in range(20)]
    assert max(abs(v) for v in values) > 1e-3


@pytest.mark.parametrize("mode", [ZetaMode.OBSERVED, ZetaMode.INTEGRATED])
def test_mean_score_at_true_nuisances_equals_target(rng, mode):
    for _ in range(10):
        pop = random_population(rng, sizes=(3, 2, 3, 2))
        data, weights = support_dataset(pop)
        bundle = true_bdfd_nuisances(pop, data)
        assert weights @ bdfd_scores(data.y, bundle, mode=mode) == pytest.approx(true_theta_bar(pop, mode), abs=1e-10)


def test_corrections_have_mean_zero_at_every_level(rng):
    pop = random_population(rng, sizes=(3, 3, 2, 2))
    data, weights = support_dataset(pop)
    bundle = true_bdfd_nuisances(pop, data)
    m_obs = data.m[:, 0].astype(int)
    for d in range(pop.n_d):
        assert weights @ r_term(data.y, data.d, bundle, d) == pytest.approx(0.0, abs=1e-12)
        assert weights @ s_term(data.y, data.d, m_obs, bundle, d) == pytest.approx(0.0, abs=1e-12)


def test_observed_zeta_reproduces_back_door_mean(rng):
    pop = random_population(rng, sizes=(2, 2, 3, 2))
    data, _ = support_dataset(pop)
    bundle = true_bdfd_nuisances(pop, data)
    rows = np.arange(bundle.n)
    assert np.allclose(zeta(bundle, bundle.d_obs), bundle.q_hat[rows, bundle.d_obs], atol=1e-12)
    assert isinstance(zeta(bundle, 0, i=0, mode=ZetaMode.INTEGRATED), float)


def test_nested_mean_checks_level(rng):
    pop = random_population(rng)
    data, _ = support_dataset(pop)
    bundle = true_bdfd_nuisances(pop, data)
    with pytest.raises(ArgumentError):
        nested_mean(bundle, 5)
    assert np.isfinite(nested_mean(bundle, 1, i=0))


def test_estimate_with_true_nuisances_covers_target(rng):
    pop = random_population(np.random.default_rng(7))
    target = true_theta_bar(pop, ZetaMode.INTEGRATED)
    data = sample(pop, 100_000, rng)
    result = estimate_bdfd(
        data, make_folds(data.n, 2, 0), LearnerSpec(), None,
        nuisances=true_bdfd_nuisances(pop, data), zeta_mode=ZetaMode.INTEGRATED,
    )
    assert abs(result.theta_hat - target) <= 3 * result.se
    assert result.test == TestKind.BDFD
    assert set(result.diagnostics["level_means"]) == {"0", "1"}


def test_learned_nuisances_on_binary_mediator_design():
    data = simulate(DgpConfig(n=600, p=5, seed=4, mediator=MediatorKind.BINARY))
    result = run_test(data, EngineParams(test=TestKind.BDFD, folds=3), seed=5)
    assert np.isfinite(result.theta_hat) and result.se > 0
    assert result.n_effective <= data.n
    assert result.diagnostics["score"] == "bdfd-observed"


def test_continuous_mediator_is_rejected():
    data = simulate(DgpConfig(n=100, p=3))
    with pytest.raises(ArgumentError, match="discrete mediator"):
        estimate_bdfd(data, make_folds(data.n, 2, 0), LearnerSpec(), TrimRule())


def _crossed_world() -> DiscretePopulation:
    """
    D and M independent fair coins, P(Y=1 | d, m) = 0.2 if d == m else 0.8.

    P(Y=1 | d) = 0.5 for both levels, so back-door and front-door means agree
    while Y depends on D given M.
    """
    p_y = np.empty((2, 2, 2, 1, 2))
    for d in range(2):
        for m in range(2):
            heads = 0.2 if d == m else 0.8
            p_y[d, m, :, :] = [1 - heads, heads]
    return DiscretePopulation(
        y_values=[0.0, 1.0],
        p_x=[0.5, 0.5],
        p_u=[1.0],
        p_d=np.full((2, 1, 2), 0.5),
        p_m=np.full((2, 2, 1, 2), 0.5),
        p_y=p_y,
    )


def test_front_door_equality_without_implication_separates_the_tests(rng):
    pop = _crossed_world()
    joint = marginalize(pop)
    assert check_bdfd(joint).holds
    assert check_ti(joint).deviation == pytest.approx(0.6)
    binary = TreatmentPartition(cells=((0,), (1,)))
    assert true_theta(pop, binary) == pytest.approx(0.36, abs=1e-12)
    assert abs(true_theta_bar(pop, ZetaMode.INTEGRATED)) < 1e-12

    data = sample(pop, 50_000, rng)
    folds = make_folds(data.n, 2, 0)
    ci = estimate(data, binary, folds, LearnerSpec(), TrimRule(), nuisances=true_nuisances(pop, binary, data))
    bdfd = estimate_bdfd(
        data, folds, LearnerSpec(), TrimRule(),
        nuisances=true_bdfd_nuisances(pop, data), zeta_mode=ZetaMode.INTEGRATED,
    )
    assert ci.p_value < 1e-6
    assert abs(ci.theta_hat - 0.36) <= 4 * ci.se
    assert abs(bdfd.theta_hat) <= 4 * bdfd.se


def test_learned_nuisances_separate_the_tests(rng):
    data = sample(_crossed_world(), 4000, rng)
    ci = run_test(data, EngineParams(test=TestKind.CI, folds=5), seed=11)
    bdfd = run_test(data, EngineParams(test=TestKind.BDFD, folds=5, zeta=ZetaMode.INTEGRATED), seed=11)
    assert ci.p_value < 1e-4
    assert abs(bdfd.theta_hat) <= 4 * bdfd.se


@pytest.mark.slow
def test_size_on_mediation_world():
    pop = mediation_population(confounded=True)
    params = EngineParams(test=TestKind.BDFD, folds=5, zeta=ZetaMode.INTEGRATED)
    keeps = 0
    for run in range(100):
        data = sample(pop, 5000, np.random.default_rng(run))
        keeps += run_test(data, params, seed=run).p_value > 0.05
    assert keeps >= 90

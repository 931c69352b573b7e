from __future__ import annotations

import numpy as np
import pytest

from fullmed.data import Dataset, make_folds
from fullmed.errors import FoldDegeneracyError
from fullmed.estimators.crossfit import crossfit_bdfd, crossfit_nuisances
from fullmed.estimators.partition import TreatmentPartition
from fullmed.learners.base import LearnerSpec

BINARY = TreatmentPartition(cells=((0,), (1,)))
THREE = TreatmentPartition(cells=((0,), (1,), (2,)))

NEAR_OLS = LearnerSpec(lambda_grid=(1e-8,), tol=1e-10, max_iter=20_000)


def _linear_data(rng, n: int = 300, levels: int = 2, noise: float = 0.0) -> Dataset:
    x = rng.normal(size=(n, 2))
    d = np.arange(n) % levels
    rng.shuffle(d)
    m = 0.4 * d + rng.normal(size=n)
    y = 1.0 + 2.0 * m - x[:, 0] + 0.5 * x[:, 1] + noise * rng.normal(size=n)
    return Dataset(y=y, d=d, m=m[:, None], x=x)


def test_predictions_are_out_of_fold(rng):
    data = _linear_data(rng, noise=1.0)
    folds = make_folds(data.n, 3, seed=2)
    spec = LearnerSpec(cv_folds=3)
    base = crossfit_nuisances(data, BINARY, folds, spec)

    own = folds.test_indices(0)
    y = data.y.copy()
    y[own] += 5.0 * rng.normal(size=own.size)
    moved = crossfit_nuisances(Dataset(y=y, d=data.d, m=data.m, x=data.x), BINARY, folds, spec)

    assert np.array_equal(moved.mu_by_level[own], base.mu_by_level[own])
    assert np.array_equal(moved.p_by_level[own], base.p_by_level[own])
    others = folds.train_indices(0)
    assert not np.allclose(moved.mu_by_level[others], base.mu_by_level[others])
    assert np.array_equal(base.fold_of, folds.assignment)


def test_binary_bundle_layout(rng):
    data = _linear_data(rng, n=100, noise=1.0)
    bundle = crossfit_nuisances(data, BINARY, make_folds(data.n, 2, seed=0), LearnerSpec(cv_folds=3))
    assert bundle.mu_by_level.shape == (100, 2)
    assert np.array_equal(bundle.mu_complement[:, 0], bundle.mu_by_level[:, 1])
    assert np.array_equal(bundle.mu_complement[:, 1], bundle.mu_by_level[:, 0])
    assert np.allclose(bundle.p_by_level.sum(axis=1), 1.0)


def test_three_cells_give_three_model_pairs(rng):
    data = _linear_data(rng, levels=3, noise=1.0)
    bundle = crossfit_nuisances(data, THREE, make_folds(data.n, 3, seed=1), LearnerSpec(cv_folds=3))
    for name in ("mu_by_level", "mu_complement", "p_by_level"):
        assert getattr(bundle, name).shape == (data.n, 3)
    assert np.all((bundle.p_by_level > 0) & (bundle.p_by_level < 1))
    assert bundle.n_cells == 3


@pytest.mark.parametrize("partition, levels", [(BINARY, 2), (THREE, 3)])
def test_noiseless_linear_outcome_is_reproduced(rng, partition, levels):
    data = _linear_data(rng, levels=levels)
    bundle = crossfit_nuisances(data, partition, make_folds(data.n, 3, seed=4), NEAR_OLS)
    for cell in range(partition.n_cells):
        assert np.allclose(bundle.mu_by_level[:, cell], data.y, atol=1e-4)
        assert np.allclose(bundle.mu_complement[:, cell], data.y, atol=1e-4)


def test_treatment_level_missing_from_a_training_fold():
    folds = make_folds(30, 3, seed=0)
    d = np.zeros(30, dtype=int)
    d[folds.test_indices(0)[:2]] = 1
    data = Dataset(y=np.arange(30.0), d=d, m=np.linspace(0, 1, 30)[:, None], x=np.zeros((30, 1)))

    with pytest.raises(FoldDegeneracyError) as error:
        crossfit_nuisances(data, BINARY, folds, NEAR_OLS)
    assert error.value.fold == 0
    assert error.value.cell == 0
    assert "outside" in error.value.reason


def test_empty_mediator_cell_in_a_training_fold(rng):
    n = 60
    folds = make_folds(n, 3, seed=5)
    d = np.arange(n) % 2
    m = np.zeros(n)
    treated = folds.test_indices(0)[d[folds.test_indices(0)] == 1]
    m[treated[:3]] = 1.0
    m[folds.train_indices(0)[d[folds.train_indices(0)] == 0][:6]] = 1.0
    data = Dataset(y=rng.normal(size=n), d=d, m=m[:, None], x=rng.normal(size=(n, 1)))

    with pytest.raises(FoldDegeneracyError) as error:
        crossfit_bdfd(data, folds, LearnerSpec(lambda_grid=(0.01,)))
    assert error.value.fold == 0
    assert error.value.cell == ("d", 1, "m", 1)

from __future__ import annotations

import numpy as np
import pytest

from fullmed.data import ALL_REMAINING, ColumnSchema, Dataset, TrimRule, apply_trim, load_csv, make_folds
from fullmed.errors import ArgumentError, DataError, DataParseError, SchemaError, ValidationError


def _write(tmp_path, text: str):
    path = tmp_path / "sample.csv"
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv_recodes_treatment(tmp_path):
    path = _write(tmp_path, "y,d,m,x1\n1.0,1,0.5,2\n2.0,3,0.1,3\n0.5,1,0.2,4\n1.5,3,0.9,5\n")
    data = load_csv(path, ColumnSchema(outcome="y", treatment="d", mediators=("m",), covariates=("x1",)))

    assert data.n == 4
    assert data.d.tolist() == [0, 1, 0, 1]
    assert data.treatment_labels == (1, 3)
    assert data.m.shape == (4, 1)
    assert data.x[:, 0].tolist() == [2.0, 3.0, 4.0, 5.0]


def test_load_csv_all_remaining_covariates(tmp_path):
    path = _write(tmp_path, "a,y,d,m,b\n1,0,0,1,2\n3,1,1,0,4\n")
    data = load_csv(path, ColumnSchema(outcome="y", treatment="d", mediators=("m",), covariates=ALL_REMAINING))
    assert data.covariate_names == ("a", "b")


def test_load_csv_names_the_empty_cell(tmp_path):
    path = _write(tmp_path, "y,d,m\n1,0,1\n2,,0\n")
    with pytest.raises(ValidationError, match=r"column 'd' at row 2"):
        load_csv(path, ColumnSchema(outcome="y", treatment="d", mediators=("m",)))


def test_load_csv_errors(tmp_path):
    schema = ColumnSchema(outcome="y", treatment="d", mediators=("m",))
    with pytest.raises(DataError):
        load_csv(tmp_path / "missing.csv", schema)
    with pytest.raises(SchemaError, match="m"):
        load_csv(_write(tmp_path, "y,d\n1,0\n2,1\n"), schema)
    with pytest.raises(DataParseError, match="abc"):
        load_csv(_write(tmp_path, "y,d,m\n1,0,abc\n2,1,0\n"), schema)


def test_dataset_rejects_constant_treatment():
    with pytest.raises(ValidationError):
        Dataset(y=np.zeros(3), d=np.zeros(3, dtype=int), m=np.zeros((3, 1)), x=np.zeros((3, 0)))


def test_dataset_closes_gaps_in_treatment_codes():
    data = Dataset(y=np.arange(4.0), d=[0, 2, 2, 0], m=np.zeros((4, 1)), x=np.zeros((4, 0)))
    assert data.d.tolist() == [0, 1, 1, 0]
    assert data.treatment_labels == (0, 2)
    assert data.n_levels == 2

    labelled = Dataset(
        y=np.arange(4.0), d=[2, 0, 2, 0], m=np.zeros((4, 1)), x=np.zeros((4, 0)),
        treatment_labels=("low", "mid", "high"),
    )
    assert labelled.d.tolist() == [1, 0, 1, 0]
    assert labelled.treatment_labels == ("low", "high")


def test_dataset_subsample_keeps_original_labels():
    data = Dataset(
        y=np.arange(6.0), d=[0, 1, 2, 0, 1, 2], m=np.zeros((6, 1)), x=np.zeros((6, 0)),
        treatment_labels=(10, 20, 30),
    )
    subsample = data.take([0, 2, 3, 5])
    assert subsample.d.tolist() == [0, 1, 0, 1]
    assert subsample.treatment_labels == (10, 30)


def test_dataset_rejects_short_treatment_labels():
    with pytest.raises(ValidationError, match="treatment_labels"):
        Dataset(y=np.arange(3.0), d=[0, 1, 2], m=np.zeros((3, 1)), x=np.zeros((3, 0)), treatment_labels=("a", "b"))



def test_make_folds_sizes():
    assert make_folds(10, 5, seed=0).sizes.tolist() == [2] * 5
    assert sorted(make_folds(11, 5, seed=0).sizes.tolist()) == [2, 2, 2, 2, 3]


def test_make_folds_is_deterministic():
    first = make_folds(37, 4, seed=9).assignment
    assert np.array_equal(first, make_folds(37, 4, seed=9).assignment)
    assert not np.array_equal(first, make_folds(37, 4, seed=10).assignment)


def test_make_folds_partition_covers_every_row():
    plan = make_folds(23, 3, seed=1)
    pieces = np.concatenate([plan.test_indices(k) for k in range(3)])
    assert sorted(pieces.tolist()) == list(range(23))
    assert set(plan.train_indices(0)).isdisjoint(plan.test_indices(0))


@pytest.mark.parametrize("n, k", [(5, 6), (5, 1)])
def test_make_folds_rejects_bad_k(n, k):
    with pytest.raises(ArgumentError):
        make_folds(n, k, seed=0)


def test_apply_trim_example():
    result = apply_trim(np.array([0.5, 0.04, 0.96]), TrimRule(0.05, 0.95))
    assert result.kept.tolist() == [0]
    assert result.n_discarded == 2


def test_apply_trim_is_idempotent(rng):
    p = rng.uniform(size=200)
    rule = TrimRule(0.1, 0.9)
    first = apply_trim(p, rule)
    second = apply_trim(p[first.kept], rule)
    assert second.n_discarded == 0
    assert second.n_kept == first.n_kept


def test_apply_trim_matrix_requires_every_column():
    p = np.array([[0.5, 0.5], [0.5, 0.01], [0.2, 0.3]])
    assert apply_trim(p, TrimRule()).kept.tolist() == [0, 2]


def test_trim_rule_bounds():
    with pytest.raises(ArgumentError):
        TrimRule(0.6, 0.9)
    with pytest.raises(ArgumentError):
        apply_trim(np.array([1.2]), TrimRule())

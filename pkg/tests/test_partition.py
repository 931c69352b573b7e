from __future__ import annotations

import numpy as np
import pytest

from fullmed.config import PartitionMethod
from fullmed.errors import ArgumentError, PartitionError
from fullmed.estimators.partition import TreatmentPartition, partition_treatment


def test_binary_treatment_gives_two_cells():
    d = np.array([0] * 30 + [1] * 70)
    assert partition_treatment(d, c=0.29).cells == ((0,), (1,))


def test_quantile_median_split():
    d = np.tile(np.arange(4), 25)
    partition = partition_treatment(d, PartitionMethod.QUANTILE, n_cells=2)
    assert partition.cells == ((0, 1), (2, 3))
    assert partition.method == PartitionMethod.QUANTILE


def test_single_frequent_level_is_a_partition_error():
    d = np.array([0] * 94 + [1] * 3 + [2] * 3)
    with pytest.raises(PartitionError, match="need at least 2 cells"):
        partition_treatment(d, c=0.05)


def test_sparse_levels_merge_into_nearest_retained_level():
    d = np.array([0] * 50 + [1] * 49 + [2])
    partition = partition_treatment(d, c=0.05)
    assert partition.cells == ((0,), (1, 2))
    assert partition.cell_of(np.array([2, 0])).tolist() == [1, 0]


def test_merge_ties_go_to_the_lower_level():
    d = np.array([0] * 45 + [1] * 2 + [2] * 53)
    assert partition_treatment(d, c=0.05).cells == ((0, 1), (2,))


def test_partition_arguments():
    with pytest.raises(ArgumentError):
        partition_treatment(np.zeros(5, dtype=int))
    with pytest.raises(ArgumentError):
        partition_treatment(np.arange(6) % 3, PartitionMethod.QUANTILE)
    with pytest.raises(ArgumentError):
        TreatmentPartition(cells=((0, 1), (1,)))
    with pytest.raises(ArgumentError, match="outside the partition"):
        TreatmentPartition(cells=((0,), (1,))).cell_of(np.array([3]))

"""
Treatment partitions.

A partition groups treatment codes into L disjoint cells. Binary
treatments give the cells {0} and {1}; multivalued treatments keep every
level that is frequent enough (discrete method) or are cut at empirical
quantiles (quantile method).
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from fullmed.config import PartitionMethod
from fullmed.errors import ArgumentError, PartitionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TreatmentPartition:
    """
    Disjoint cells of treatment codes covering the observed support.

    Attributes:
        cells: One tuple of treatment codes per cell, in increasing order
        method: How the cells were formed
        c: Minimum cell probability used by the discrete method
    """
    cells: Tuple[Tuple[int, ...], ...]
    method: PartitionMethod = PartitionMethod.DISCRETE
    c: float = 0.0

    def __post_init__(self):
        seen = [level for cell in self.cells for level in cell]
        if len(seen) != len(set(seen)):
            raise ArgumentError("partition cells must be disjoint")
        if any(len(cell) == 0 for cell in self.cells):
            raise ArgumentError("partition cells must be non-empty")

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def is_binary(self) -> bool:
        return self.n_cells == 2

    def cell_of(self, d: np.ndarray) -> np.ndarray:
        """
        Cell index for each treatment code.

        Raises:
            ArgumentError: If a code belongs to no cell
        """
        d = np.asarray(d)
        lookup = {level: idx for idx, cell in enumerate(self.cells) for level in cell}
        try:
            return np.array([lookup[int(v)] for v in d], dtype=np.int64)
        except KeyError as e:
            raise ArgumentError(f"treatment code {e.args[0]} is outside the partition") from e

    def indicator(self, d: np.ndarray, cell: int) -> np.ndarray:
        """1{D in cell} as a float vector."""
        return np.isin(np.asarray(d), self.cells[cell]).astype(float)


def _discrete_cells(levels: np.ndarray, freq: np.ndarray, c: float) -> Tuple[Tuple[int, ...], ...]:
    retained = [int(v) for v, f in zip(levels, freq) if f > c]
    if len(retained) < 2:
        raise PartitionError(
            f"only {len(retained)} treatment level(s) have probability above c={c}; need at least 2 cells"
        )

    groups = {level: [level] for level in retained}
    for level in levels:
        level = int(level)
        if level in groups:
            continue
        # nearest retained code, ties go to the lower code
        target = min(retained, key=lambda r: (abs(r - level), r))
        groups[target].append(level)
        logger.info("Merging sparse treatment level %d into cell of level %d", level, target)

    return tuple(tuple(sorted(groups[r])) for r in sorted(groups))


def _quantile_cells(d: np.ndarray, levels: np.ndarray, n_cells: int) -> Tuple[Tuple[int, ...], ...]:
    probs = np.arange(1, n_cells) / n_cells
    cuts = np.quantile(d, probs, method="inverted_cdf")
    assignment = np.searchsorted(cuts, levels, side="left")
    cells = [tuple(int(v) for v in levels[assignment == k]) for k in range(n_cells)]
    cells = tuple(cell for cell in cells if cell)
    if len(cells) < 2:
        raise PartitionError(f"quantile cut points leave {len(cells)} non-empty cell(s); need at least 2")
    return cells


def partition_treatment(
    d: np.ndarray,
    method: PartitionMethod = PartitionMethod.DISCRETE,
    n_cells: Optional[int] = None,
    c: float = 0.01,
) -> TreatmentPartition:
    """
    Partition observed treatment codes into cells.

    Args:
        d: Treatment codes
        method: discrete (one cell per frequent level) or quantile
        n_cells: Number of cells for the quantile method
        c: Minimum empirical probability of a retained level (discrete method)

    Returns:
        TreatmentPartition with at least two cells

    Raises:
        ArgumentError: If d is constant or n_cells is missing for quantiles
        PartitionError: If fewer than two usable cells exist
    """
    d = np.asarray(d)
    levels, counts = np.unique(d, return_counts=True)
    if levels.size < 2:
        raise ArgumentError("treatment is constant; nothing to partition")

    method = PartitionMethod(method)
    if method == PartitionMethod.QUANTILE:
        if n_cells is None or n_cells < 2:
            raise ArgumentError("quantile partitions need n_cells >= 2")
        cells = _quantile_cells(d, levels, n_cells)
    else:
        cells = _discrete_cells(levels, counts / d.size, c)

    return TreatmentPartition(cells=cells, method=method, c=c)

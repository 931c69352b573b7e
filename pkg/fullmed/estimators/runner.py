"""
Run either test on a dataset over S independent sample splits.

Shared by CSV runs and Monte Carlo replications: each split draws its
own fold plan and learner seeds from the run seed, and the split
results are combined with the median rule.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from fullmed.config import (
    Alternative,
    Defaults,
    LearnerBackend,
    PartitionMethod,
    RunConfig,
    ScoreKind,
    TestKind,
    ZetaMode,
)
from fullmed.data import Dataset, TrimRule, make_folds
from fullmed.estimators.bdfd_test import estimate_bdfd
from fullmed.estimators.ci_test import TestResult, aggregate_splits, estimate
from fullmed.estimators.partition import partition_treatment
from fullmed.learners.base import LearnerSpec
from fullmed.utils.seeding import STREAM_FOLDS, STREAM_LEARNER_CV, derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EngineParams:
    """Everything that determines a test run apart from the data and the seed."""
    test: TestKind = TestKind.CI
    folds: int = Defaults.FOLDS
    splits: int = 1
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    trim: Optional[TrimRule] = field(default_factory=TrimRule)
    partition_method: PartitionMethod = PartitionMethod.DISCRETE
    n_cells: Optional[int] = None
    min_prob: float = Defaults.MIN_CELL_PROB
    score: ScoreKind = ScoreKind.AUTO
    zeta: ZetaMode = ZetaMode.OBSERVED
    alternative: Alternative = Alternative.TWO_SIDED

    @classmethod
    def from_config(cls, config: RunConfig, test: Optional[TestKind] = None) -> "EngineParams":
        grid = "auto" if config.penalty is None else (float(config.penalty),)
        return cls(
            test=TestKind(test or config.test),
            folds=config.folds,
            splits=config.effective_splits,
            learner=LearnerSpec(
                lambda_grid=grid,
                cv_folds=config.cv_folds,
                max_iter=config.max_iter,
                tol=config.tol,
                standardize=config.standardize,
                backend=LearnerBackend(config.learner_backend),
            ),
            trim=TrimRule(config.trim_lower, config.trim_upper) if config.trim_enabled else None,
            partition_method=config.partition_method,
            n_cells=config.cells,
            min_prob=config.min_prob,
            score=config.score,
            zeta=config.zeta,
            alternative=config.alternative,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "test": str(self.test),
            "folds": self.folds,
            "splits": self.splits,
            "learner": str(self.learner.backend),
            "trim": None if self.trim is None else [self.trim.lower, self.trim.upper],
            "score": str(self.score),
            "zeta": str(self.zeta),
            "alternative": str(self.alternative),
        }


def run_test(data: Dataset, params: EngineParams, seed: int, threads: int = 1) -> TestResult:
    """
    Apply the configured test to ``data`` on ``params.splits`` sample splits.

    Args:
        data: Observed sample
        params: Engine parameters
        seed: Run seed; split s uses fold and learner seeds derived from (seed, s)
        threads: Workers for per-fold fitting

    Returns:
        The single-split result, or the median aggregate over splits
    """
    partition = None
    if params.test == TestKind.CI:
        partition = partition_treatment(data.d, params.partition_method, params.n_cells, params.min_prob)
        logger.info("Treatment partition: %s", partition.cells)

    results = []
    for split in range(params.splits):
        folds = make_folds(data.n, params.folds, derive_seed(seed, STREAM_FOLDS, split))
        spec = params.learner.with_seed(derive_seed(seed, STREAM_LEARNER_CV, split))
        if partition is not None:
            result = estimate(
                data, partition, folds, spec, params.trim,
                score=params.score, alternative=params.alternative, threads=threads,
            )
        else:
            result = estimate_bdfd(
                data, folds, spec, params.trim,
                zeta_mode=params.zeta, alternative=params.alternative, threads=threads,
            )
        logger.debug("Split %d: theta=%.6f se=%.6f", split, result.theta_hat, result.se)
        results.append(result)
    return aggregate_splits(results)

"""Cross-fitting, scores and the two tests."""

from fullmed.estimators.bdfd_test import estimate_bdfd, nested_mean, r_term, s_term, zeta
from fullmed.estimators.ci_test import (
    NuisanceDirection,
    OrthogonalityReport,
    TestResult,
    aggregate_splits,
    estimate,
    orthogonality_probe,
)
from fullmed.estimators.crossfit import (
    BdFdNuisances,
    NuisanceBundle,
    crossfit_bdfd,
    crossfit_nuisances,
)
from fullmed.estimators.partition import TreatmentPartition, partition_treatment
from fullmed.estimators.runner import EngineParams, run_test
from fullmed.estimators.scores import score_binary, score_multivalued

__all__ = [
    "BdFdNuisances",
    "EngineParams",
    "NuisanceBundle",
    "NuisanceDirection",
    "OrthogonalityReport",
    "TestResult",
    "TreatmentPartition",
    "aggregate_splits",
    "crossfit_bdfd",
    "crossfit_nuisances",
    "estimate",
    "estimate_bdfd",
    "nested_mean",
    "orthogonality_probe",
    "partition_treatment",
    "r_term",
    "run_test",
    "s_term",
    "score_binary",
    "score_multivalued",
    "zeta",
]

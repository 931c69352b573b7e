"""
Nuisance learners.

Backends register here; estimators call ``fit`` and ``predict`` and
select the backend through ``LearnerSpec.backend``.
"""

from typing import Dict, Optional, Type

import numpy as np

from fullmed.config import LearnerBackend
from fullmed.errors import LearnerError
from fullmed.learners.base import Learner, LearnerSpec, SparseModel
from fullmed.learners.lasso import CoordinateDescentLearner, kkt_violation
from fullmed.learners.sklearn_lasso import SklearnLassoLearner

LEARNERS: Dict[LearnerBackend, Type[Learner]] = {
    LearnerBackend.LASSO: CoordinateDescentLearner,
    LearnerBackend.SKLEARN_LASSO: SklearnLassoLearner,
}


def get_learner(backend: LearnerBackend) -> Learner:
    """Instantiate and validate a registered backend."""
    try:
        learner = LEARNERS[LearnerBackend(backend)]()
    except (KeyError, ValueError) as e:
        raise LearnerError(f"Unknown learner backend '{backend}'") from e
    learner.validate()
    return learner


def fit(
    spec: LearnerSpec,
    features: np.ndarray,
    target: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> SparseModel:
    """Fit with the backend named in ``spec``."""
    return get_learner(spec.backend).fit(spec, features, target, weights)


def predict(model: SparseModel, features: np.ndarray) -> np.ndarray:
    """Predictions of a fitted model (clipped probabilities for logistic)."""
    return model.predict(features)


__all__ = [
    "LEARNERS",
    "CoordinateDescentLearner",
    "Learner",
    "LearnerSpec",
    "SklearnLassoLearner",
    "SparseModel",
    "fit",
    "get_learner",
    "kkt_violation",
    "predict",
]

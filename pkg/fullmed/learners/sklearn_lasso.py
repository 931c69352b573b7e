"""
scikit-learn learner backend.

Fits the same penalized objectives as the native learner with
scikit-learn's ``Lasso`` and saga ``LogisticRegression``. Standardization,
the automatic grid and the cross-validation split are shared with the
native learner, so the two backends select penalties the same way.
"""

import logging
import warnings
from typing import Optional

import numpy as np

from fullmed.config import LearnerFamily
from fullmed.data import make_folds
from fullmed.learners.base import PROB_CLIP, Learner, LearnerSpec, SparseModel, check_inputs, expit
from fullmed.learners.lasso import auto_grid, pointwise_loss, standardize

logger = logging.getLogger(__name__)

# Optional import - gracefully handle missing dependency
try:
    from sklearn.exceptions import ConvergenceWarning
    from sklearn.linear_model import Lasso, LogisticRegression
    SKLEARN_AVAILABLE = True
except ImportError:
    Lasso = LogisticRegression = ConvergenceWarning = None
    SKLEARN_AVAILABLE = False


class SklearnLassoLearner(Learner):
    """
    Lasso / l1-logistic learner backed by scikit-learn.

    Penalty mapping: scikit-learn's ``Lasso(alpha)`` minimizes the same
    weighted objective as the native learner with alpha = lambda, and
    ``LogisticRegression(C)`` matches it with C = 1 / (sum(weights) * lambda).
    """

    @property
    def name(self) -> str:
        return "scikit-learn lasso"

    def is_available(self) -> bool:
        return SKLEARN_AVAILABLE

    def fit(
        self,
        spec: LearnerSpec,
        features: np.ndarray,
        target: np.ndarray,
        weights: Optional[np.ndarray] = None,
    ) -> SparseModel:
        self.validate()
        features, target, weights = check_inputs(spec, features, target, weights)
        design, center, scale = standardize(features, weights / weights.sum(), spec.standardize)
        logistic = spec.family == LearnerFamily.LOGISTIC

        mean = float(weights @ target / weights.sum())
        if design.shape[1] == 0 or (logistic and np.all(target == target[0])):
            if logistic and np.all(target == target[0]):
                logger.warning("Constant 0/1 target; returning the clipped constant probability")
            return self._constant(spec, design, center, scale, mean, logistic)

        if spec.lambda_grid == "auto":
            v = weights / weights.sum()
            lam_max = float(np.max(np.abs(design.T @ (v * (target - mean)))))
            if lam_max <= 0.0:
                return self._constant(spec, design, center, scale, mean, logistic)
            grid = auto_grid(lam_max, spec)
        else:
            grid = np.asarray(spec.lambda_grid, dtype=float)

        cv_loss = None
        index = 0
        if grid.size > 1:
            n = design.shape[0]
            plan = make_folds(n, min(spec.cv_folds, n), spec.seed)
            cv_loss = np.zeros(grid.size)
            for fold in range(plan.k):
                train, test = plan.train_indices(fold), plan.test_indices(fold)
                for idx, lam in enumerate(grid):
                    b0, beta = self._fit_one(spec, design[train], target[train], weights[train], lam)
                    eta = b0 + design[test] @ beta
                    prediction = np.clip(expit(eta), PROB_CLIP, 1 - PROB_CLIP) if logistic else eta
                    cv_loss[idx] += weights[test] @ pointwise_loss(spec.family, target[test], prediction)
            cv_loss /= weights.sum()
            index = int(np.argmin(cv_loss))

        b0, beta = self._fit_one(spec, design, target, weights, grid[index])
        return SparseModel(
            intercept=b0,
            coefficients=beta,
            lambda_selected=float(grid[index]),
            family=spec.family,
            center=center,
            scale=scale,
            lambda_path=tuple(float(v) for v in grid),
            cv_loss=cv_loss,
        )

    @staticmethod
    def _constant(spec, design, center, scale, mean, logistic) -> SparseModel:
        if logistic:
            prob = min(max(mean, PROB_CLIP), 1 - PROB_CLIP)
            intercept = float(np.log(prob / (1 - prob)))
        else:
            intercept = mean
        return SparseModel(
            intercept=intercept,
            coefficients=np.zeros(design.shape[1]),
            lambda_selected=0.0,
            family=spec.family,
            center=center,
            scale=scale,
            degenerate=logistic,
        )

    @staticmethod
    def _fit_one(spec: LearnerSpec, design, target, weights, lam: float):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=ConvergenceWarning)
            if spec.family == LearnerFamily.LOGISTIC:
                if np.all(target == target[0]):
                    prob = min(max(float(target[0]), PROB_CLIP), 1 - PROB_CLIP)
                    return float(np.log(prob / (1 - prob))), np.zeros(design.shape[1])
                model = LogisticRegression(
                    penalty="l1",
                    C=1.0 / (weights.sum() * lam),
                    solver="saga",
                    tol=spec.tol,
                    max_iter=spec.max_iter,
                )
            else:
                model = Lasso(alpha=lam, tol=spec.tol, max_iter=spec.max_iter)
            model.fit(design, target, sample_weight=weights)
        intercept = np.ravel(model.intercept_)[0]
        return float(intercept), np.ravel(model.coef_).astype(float)

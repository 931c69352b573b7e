"""
Abstract base class for nuisance learners.

This module defines the interface every learner backend implements.
Estimators depend on this abstraction and on the shared ``SparseModel``
result type, never on a concrete backend.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple, Union

import numpy as np

from fullmed.config import Defaults, LearnerBackend, LearnerFamily
from fullmed.errors import ArgumentError, LearnerNotAvailableError

PROB_CLIP = 1e-6


@dataclass(frozen=True)
class LearnerSpec:
    """
    Settings of a penalized learner.

    Attributes:
        family: Loss family (squared-loss or logistic)
        lambda_grid: "auto" or a strictly decreasing tuple of positive penalties
        cv_folds: Folds used to select the penalty
        max_iter: Cap on coordinate-descent sweeps (and IRLS steps)
        tol: Convergence tolerance on the KKT residual
        standardize: Scale features to unit variance before fitting
        n_lambda: Length of the automatic grid
        lambda_min_ratio: Smallest automatic penalty relative to lambda_max
        seed: Seed of the cross-validation split
        backend: Which registered learner fits the model
    """
    family: LearnerFamily = LearnerFamily.SQUARED_LOSS
    lambda_grid: Union[str, Tuple[float, ...]] = "auto"
    cv_folds: int = Defaults.CV_FOLDS
    max_iter: int = Defaults.MAX_ITER
    tol: float = Defaults.TOL
    standardize: bool = True
    n_lambda: int = Defaults.N_LAMBDA
    lambda_min_ratio: float = Defaults.LAMBDA_MIN_RATIO
    seed: int = 0
    backend: LearnerBackend = LearnerBackend.LASSO

    def __post_init__(self):
        if isinstance(self.lambda_grid, str):
            if self.lambda_grid != "auto":
                raise ArgumentError(f"lambda_grid must be 'auto' or a tuple (got {self.lambda_grid!r})")
        else:
            grid = np.asarray(self.lambda_grid, dtype=float)
            if grid.ndim != 1 or grid.size == 0:
                raise ArgumentError("lambda_grid must be a non-empty sequence")
            if np.any(grid <= 0) or np.any(np.diff(grid) >= 0):
                raise ArgumentError("lambda_grid must be strictly positive and strictly decreasing")
            object.__setattr__(self, "lambda_grid", tuple(float(v) for v in grid))
        if self.tol <= 0:
            raise ArgumentError(f"tol must be > 0 (got {self.tol})")
        if self.cv_folds < 2:
            raise ArgumentError(f"cv_folds must be >= 2 (got {self.cv_folds})")
        if self.max_iter < 1:
            raise ArgumentError(f"max_iter must be >= 1 (got {self.max_iter})")
        if not 0.0 < self.lambda_min_ratio < 1.0 or self.n_lambda < 1:
            raise ArgumentError("automatic grid needs n_lambda >= 1 and lambda_min_ratio in (0, 1)")

    def with_family(self, family: LearnerFamily) -> "LearnerSpec":
        return replace(self, family=family)

    def with_seed(self, seed: int) -> "LearnerSpec":
        return replace(self, seed=seed)


@dataclass(frozen=True, eq=False)
class SparseModel:
    """
    A fitted penalized linear or logistic model.

    Coefficients live on the standardized feature scale:
    ``eta = intercept + ((features - center) / scale) @ coefficients``.

    Attributes:
        intercept: Intercept on the standardized scale
        coefficients: One coefficient per feature
        lambda_selected: Penalty of the returned fit
        family: Loss family
        center: Per-feature centering
        scale: Per-feature scaling (ones when not standardized)
        lambda_path: Penalties that were considered
        cv_loss: Cross-validated loss per penalty (None when no CV ran)
        degenerate: True when the target was constant
        converged: False if the iteration cap was hit
    """
    intercept: float
    coefficients: np.ndarray
    lambda_selected: float
    family: LearnerFamily
    center: np.ndarray
    scale: np.ndarray
    lambda_path: Tuple[float, ...] = ()
    cv_loss: Optional[np.ndarray] = field(default=None, repr=False)
    degenerate: bool = False
    converged: bool = True

    @property
    def n_features(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.coefficients))

    @property
    def raw_coefficients(self) -> np.ndarray:
        """Coefficients on the original feature scale."""
        return self.coefficients / self.scale

    @property
    def raw_intercept(self) -> float:
        """Intercept on the original feature scale."""
        return float(self.intercept - np.dot(self.center, self.raw_coefficients))

    def linear_predictor(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != self.n_features:
            raise ArgumentError(
                f"model expects {self.n_features} features, got array of shape {features.shape}"
            )
        return self.intercept + ((features - self.center) / self.scale) @ self.coefficients

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Linear predictor, or clipped probabilities for the logistic family."""
        eta = self.linear_predictor(features)
        if self.family == LearnerFamily.LOGISTIC:
            return np.clip(expit(eta), PROB_CLIP, 1.0 - PROB_CLIP)
        return eta


def expit(eta: np.ndarray) -> np.ndarray:
    """Numerically stable inverse logit."""
    return np.exp(-np.logaddexp(0.0, -eta))


def check_inputs(
    spec: LearnerSpec,
    features: np.ndarray,
    target: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Validate and normalize fit inputs.

    Returns:
        (features, target, weights) as float arrays; weights default to ones

    Raises:
        ArgumentError: On shape mismatches, non-finite values, bad weights,
            or a non-binary target for the logistic family
    """
    features = np.asarray(features, dtype=float)
    target = np.asarray(target, dtype=float)
    if features.ndim != 2:
        raise ArgumentError(f"features must be a matrix (got shape {features.shape})")
    if target.ndim != 1 or target.shape[0] != features.shape[0]:
        raise ArgumentError(
            f"target length {target.shape} does not match {features.shape[0]} feature rows"
        )
    if target.shape[0] < 2:
        raise ArgumentError("need at least 2 observations to fit")
    if not np.all(np.isfinite(features)) or not np.all(np.isfinite(target)):
        raise ArgumentError("features and target must be finite")

    if weights is None:
        weights = np.ones_like(target)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != target.shape or not np.all(np.isfinite(weights)):
            raise ArgumentError("weights must be a finite vector matching the target")
        if np.any(weights < 0) or weights.sum() <= 0:
            raise ArgumentError("weights must be non-negative with a positive sum")

    if spec.family == LearnerFamily.LOGISTIC and not np.all((target == 0) | (target == 1)):
        raise ArgumentError("logistic family requires a 0/1 target")
    return features, target, weights


class Learner(ABC):
    """
    Abstract base class for learner backends.

    Implementations must provide:
    - name: Human-readable backend name
    - is_available(): Check if the backend's dependencies are installed
    - fit(): Fit a penalized model with cross-validated penalty selection
    """

    @property
    @abstractmethod
    def name(self) -> str:
        """Human-readable backend name for display."""
        pass

    @abstractmethod
    def is_available(self) -> bool:
        """
        Check if the backend's dependencies are available.

        Returns:
            True if the backend can be used, False otherwise
        """
        pass

    @abstractmethod
    def fit(
        self,
        spec: LearnerSpec,
        features: np.ndarray,
        target: np.ndarray,
        weights: Optional[np.ndarray] = None,
    ) -> SparseModel:
        """
        Fit a model at the cross-validated penalty.

        Args:
            spec: Learner settings
            features: n x p matrix
            target: Length-n target (0/1 for the logistic family)
            weights: Optional non-negative observation weights

        Returns:
            Fitted SparseModel

        Raises:
            ArgumentError: On invalid inputs
        """
        pass

    def validate(self) -> None:
        """
        Validate that the backend can run.

        Raises:
            LearnerNotAvailableError: If dependencies are missing
        """
        if not self.is_available():
            raise LearnerNotAvailableError(
                f"{self.name} learner is not available. "
                f"Please install required dependencies."
            )

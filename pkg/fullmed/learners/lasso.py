"""
Native coordinate-descent lasso and l1-penalized logistic regression.

Both families share one solver for penalized weighted least squares in
covariance form: the Gram matrix of the centered design is computed once
per problem and coordinate updates touch only p numbers, so the cost of
a sweep does not grow with n. The logistic family wraps that solver in
iteratively reweighted least squares with step halving.

Objectives (v = weights / sum(weights), Z the standardized design):

    squared-loss:  1/2 * sum_i v_i (y_i - b0 - Z_i beta)^2      + lam * |beta|_1
    logistic:      sum_i v_i (log(1 + e^eta_i) - y_i eta_i)     + lam * |beta|_1

The intercept is never penalized. A solve stops when the KKT residual of
every coordinate is at most ``tol``.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from fullmed.config import LearnerFamily
from fullmed.data import make_folds
from fullmed.learners.base import (
    PROB_CLIP,
    Learner,
    LearnerSpec,
    SparseModel,
    check_inputs,
    expit,
)

logger = logging.getLogger(__name__)

# Floor on IRLS working weights p(1 - p)
MIN_WORKING_WEIGHT = 1e-5
MAX_IRLS_STEPS = 100
MAX_HALVINGS = 30

PathFit = Tuple[float, np.ndarray, bool]


def soft_threshold(value: float, lam: float) -> float:
    """Proximal operator of lam * |.|."""
    if value > lam:
        return value - lam
    if value < -lam:
        return value + lam
    return 0.0


def kkt_residual(beta: np.ndarray, grad: np.ndarray, lam: float) -> np.ndarray:
    """
    Per-coordinate violation of the lasso subgradient conditions.

    ``grad`` is the negative gradient of the smooth part of the objective.
    Nonzero coefficients need grad_j = lam * sign(beta_j); zero
    coefficients need |grad_j| <= lam.
    """
    return np.where(
        beta != 0,
        np.abs(grad - lam * np.sign(beta)),
        np.maximum(np.abs(grad) - lam, 0.0),
    )


def standardize(features: np.ndarray, v: np.ndarray, scale_features: bool) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Center features with the normalized weights v and optionally scale them.

    Constant columns keep scale 1 and stay identically zero.

    Returns:
        (design, center, scale)
    """
    center = v @ features
    centered = features - center
    if scale_features:
        scale = np.sqrt(v @ centered ** 2)
        scale[scale <= 1e-12] = 1.0
    else:
        scale = np.ones(features.shape[1])
    return centered / scale, center, scale


def auto_grid(lam_max: float, spec: LearnerSpec) -> np.ndarray:
    """Log-spaced penalties from lam_max down to lambda_min_ratio * lam_max."""
    return np.geomspace(lam_max, lam_max * spec.lambda_min_ratio, spec.n_lambda)


def _logit(prob: float) -> float:
    prob = min(max(prob, PROB_CLIP), 1.0 - PROB_CLIP)
    return float(np.log(prob / (1.0 - prob)))


class _WeightedLassoProblem:
    """
    min over (b0, beta) of 1/2 * sum_i omega_i (z_i - b0 - Z_i beta)^2 + lam * |beta|_1.

    Centering with the omega-weighted means removes the intercept; it is
    recovered afterwards from the means.
    """

    def __init__(self, design: np.ndarray, response: np.ndarray, omega: np.ndarray):
        total = omega.sum()
        self.mean_x = omega @ design / total
        self.mean_z = float(omega @ response / total)
        centered = design - self.mean_x
        weighted = centered * omega[:, None]
        self.gram = weighted.T @ centered
        self.corr = weighted.T @ (response - self.mean_z)
        self.diag = np.diag(self.gram).copy()
        self.usable = self.diag > 1e-14

    def intercept(self, beta: np.ndarray) -> float:
        return float(self.mean_z - self.mean_x @ beta)

    def solve(
        self, lam: float, beta: np.ndarray, tol: float, max_iter: int
    ) -> Tuple[np.ndarray, bool]:
        beta = beta.copy()
        beta[~self.usable] = 0.0
        grad = self.corr - self.gram @ beta

        for _ in range(max_iter):
            violation = kkt_residual(beta, grad, lam)
            violation[~self.usable] = 0.0
            if violation.max(initial=0.0) <= tol:
                return beta, True

            work = np.flatnonzero(self.usable & ((beta != 0) | (violation > tol)))
            for j in work:
                old = beta[j]
                new = soft_threshold(grad[j] + self.diag[j] * old, lam) / self.diag[j]
                if new != old:
                    grad -= self.gram[:, j] * (new - old)
                    beta[j] = new

        violation = kkt_residual(beta, self.corr - self.gram @ beta, lam)
        violation[~self.usable] = 0.0
        return beta, bool(violation.max(initial=0.0) <= tol)


class _PathFitter:
    """Fits one family along a decreasing penalty path with warm starts."""

    def __init__(self, spec: LearnerSpec, features: np.ndarray, target: np.ndarray, weights: np.ndarray):
        self.spec = spec
        self.target = target
        self.v = weights / weights.sum()

        self.design, self.center, self.scale = standardize(features, self.v, spec.standardize)

        self.target_mean = float(self.v @ target)
        self.constant_target = bool(np.all(target == target[0]))

    @property
    def logistic(self) -> bool:
        return self.spec.family == LearnerFamily.LOGISTIC

    def constant_intercept(self) -> float:
        return _logit(self.target_mean) if self.logistic else self.target_mean

    def lambda_max(self) -> float:
        """Smallest penalty at which every coefficient is zero."""
        if self.design.shape[1] == 0:
            return 0.0
        grad = self.design.T @ (self.v * (self.target - self.target_mean))
        return float(np.max(np.abs(grad)))

    def path(self, grid: np.ndarray) -> List[PathFit]:
        p = self.design.shape[1]
        beta = np.zeros(p)
        if p == 0 or (self.logistic and self.constant_target):
            return [(self.constant_intercept(), beta.copy(), True) for _ in grid]

        if not self.logistic:
            problem = _WeightedLassoProblem(self.design, self.target, self.v)
            fits = []
            for lam in grid:
                beta, ok = problem.solve(float(lam), beta, self.spec.tol, self.spec.max_iter)
                fits.append((problem.intercept(beta), beta.copy(), ok))
            return fits

        b0 = self.constant_intercept()
        fits = []
        for lam in grid:
            b0, beta, ok = self._logistic_solve(float(lam), b0, beta)
            fits.append((b0, beta.copy(), ok))
        return fits

    def _logistic_objective(self, b0: float, beta: np.ndarray, lam: float) -> float:
        eta = b0 + self.design @ beta
        return float(self.v @ (np.logaddexp(0.0, eta) - self.target * eta)) + lam * float(np.abs(beta).sum())

    def _logistic_solve(self, lam: float, b0: float, beta: np.ndarray) -> Tuple[float, np.ndarray, bool]:
        tol, max_iter = self.spec.tol, self.spec.max_iter
        current = self._logistic_objective(b0, beta, lam)

        for _ in range(min(max_iter, MAX_IRLS_STEPS)):
            eta = b0 + self.design @ beta
            prob = expit(eta)
            working_weight = np.maximum(prob * (1.0 - prob), MIN_WORKING_WEIGHT)
            working = eta + (self.target - prob) / working_weight

            problem = _WeightedLassoProblem(self.design, working, self.v * working_weight)
            proposal, _ = problem.solve(lam, beta, tol, max_iter)
            proposal_b0 = problem.intercept(proposal)

            step = 1.0
            for _ in range(MAX_HALVINGS):
                cand_b0 = b0 + step * (proposal_b0 - b0)
                cand_beta = beta + step * (proposal - beta)
                candidate = self._logistic_objective(cand_b0, cand_beta, lam)
                if candidate <= current + 1e-12:
                    break
                step *= 0.5
            else:
                return b0, beta, False

            change = max(abs(cand_b0 - b0), float(np.max(np.abs(cand_beta - beta), initial=0.0)))
            b0, beta, current = cand_b0, cand_beta, candidate
            if change < tol:
                return b0, beta, True

        return b0, beta, False

    def predict(self, b0: float, beta: np.ndarray, features: np.ndarray) -> np.ndarray:
        eta = b0 + ((features - self.center) / self.scale) @ beta
        if self.logistic:
            return np.clip(expit(eta), PROB_CLIP, 1.0 - PROB_CLIP)
        return eta


def pointwise_loss(family: LearnerFamily, target: np.ndarray, prediction: np.ndarray) -> np.ndarray:
    """Squared error or log loss per observation."""
    if family == LearnerFamily.LOGISTIC:
        prob = np.clip(prediction, PROB_CLIP, 1.0 - PROB_CLIP)
        return -(target * np.log(prob) + (1.0 - target) * np.log1p(-prob))
    return (target - prediction) ** 2


class CoordinateDescentLearner(Learner):
    """
    Lasso and l1-logistic regression by cyclic coordinate descent.

    The penalty is chosen by K-fold cross-validation (minimum mean loss)
    over a decreasing grid; the automatic grid runs log-spaced from
    lambda_max down to ``lambda_min_ratio * lambda_max``.
    """

    @property
    def name(self) -> str:
        return "Coordinate-descent lasso"

    def is_available(self) -> bool:
        return True

    def fit(
        self,
        spec: LearnerSpec,
        features: np.ndarray,
        target: np.ndarray,
        weights: Optional[np.ndarray] = None,
    ) -> SparseModel:
        features, target, weights = check_inputs(spec, features, target, weights)
        fitter = _PathFitter(spec, features, target, weights)

        if fitter.logistic and fitter.constant_target:
            logger.warning("Constant 0/1 target; returning the clipped constant probability")
            return self._constant_model(spec, fitter, 0.0, degenerate=True)

        lam_max = fitter.lambda_max()
        if spec.lambda_grid == "auto":
            if lam_max <= 0.0:
                return self._constant_model(spec, fitter, 0.0)
            grid = auto_grid(lam_max, spec)
        else:
            grid = np.asarray(spec.lambda_grid, dtype=float)

        cv_loss = None
        index = 0
        if grid.size > 1:
            cv_loss = self._cross_validate(spec, features, target, weights, grid)
            index = int(np.argmin(cv_loss))

        b0, beta, converged = fitter.path(grid[: index + 1])[-1]
        if not converged:
            logger.warning(
                "%s fit did not reach KKT tolerance %.1e at lambda=%.3e",
                spec.family, spec.tol, grid[index],
            )
        return SparseModel(
            intercept=b0,
            coefficients=beta,
            lambda_selected=float(grid[index]),
            family=spec.family,
            center=fitter.center,
            scale=fitter.scale,
            lambda_path=tuple(float(v) for v in grid),
            cv_loss=cv_loss,
            converged=converged,
        )

    @staticmethod
    def _constant_model(spec: LearnerSpec, fitter: _PathFitter, lam: float, degenerate: bool = False) -> SparseModel:
        return SparseModel(
            intercept=fitter.constant_intercept(),
            coefficients=np.zeros(fitter.design.shape[1]),
            lambda_selected=lam,
            family=spec.family,
            center=fitter.center,
            scale=fitter.scale,
            degenerate=degenerate,
        )

    @staticmethod
    def _cross_validate(
        spec: LearnerSpec,
        features: np.ndarray,
        target: np.ndarray,
        weights: np.ndarray,
        grid: np.ndarray,
    ) -> np.ndarray:
        """Weighted mean out-of-fold loss for each penalty in the grid."""
        n = features.shape[0]
        plan = make_folds(n, min(spec.cv_folds, n), spec.seed)
        loss = np.zeros(grid.size)

        for fold in range(plan.k):
            train, test = plan.train_indices(fold), plan.test_indices(fold)
            if weights[train].sum() <= 0:
                continue
            fitter = _PathFitter(spec, features[train], target[train], weights[train])
            for idx, (b0, beta, _) in enumerate(fitter.path(grid)):
                prediction = fitter.predict(b0, beta, features[test])
                loss[idx] += weights[test] @ pointwise_loss(spec.family, target[test], prediction)

        return loss / weights.sum()


def kkt_violation(
    model: SparseModel,
    features: np.ndarray,
    target: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> float:
    """
    Largest subgradient-condition violation of a fitted model.

    Evaluated on the standardized scale the model was fitted on.
    """
    features = np.asarray(features, dtype=float)
    target = np.asarray(target, dtype=float)
    weights = np.ones_like(target) if weights is None else np.asarray(weights, dtype=float)
    v = weights / weights.sum()

    design = (features - model.center) / model.scale
    eta = model.intercept + design @ model.coefficients
    fitted = expit(eta) if model.family == LearnerFamily.LOGISTIC else eta
    grad = design.T @ (v * (target - fitted))
    return float(kkt_residual(model.coefficients, grad, model.lambda_selected).max(initial=0.0))

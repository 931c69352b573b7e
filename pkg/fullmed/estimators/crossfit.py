"""
Cross-fitted nuisance estimation.

For every fold k the nuisance models are fitted on the other folds and
evaluated on fold k, so each observation's predictions come from models
that never saw it. Two bundles are produced:

- ``NuisanceBundle``: outcome means within and outside each treatment
  cell given (M, X), and cell propensities given (M, X). Used by the
  conditional mean independence test.
- ``BdFdNuisances``: back-door and front-door ingredients for discrete
  treatment and mediator. Used by the BD-FD test.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from fullmed import learners
from fullmed.config import LearnerFamily
from fullmed.data import Dataset, FoldPlan
from fullmed.errors import ArgumentError, FoldDegeneracyError
from fullmed.estimators.partition import TreatmentPartition
from fullmed.learners.base import PROB_CLIP, LearnerSpec
from fullmed.utils.seeding import STREAM_LEARNER_CV, derive_seed

logger = logging.getLogger(__name__)

# Model roles, used to derive distinct CV seeds per fitted model
ROLE_MU_IN = 0
ROLE_MU_OUT = 1
ROLE_PROPENSITY = 2
ROLE_Q = 3
ROLE_MU_MD = 4
ROLE_TREATMENT = 5
ROLE_MEDIATOR = 6

MAX_MEDIATOR_LEVELS = 20


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class NuisanceBundle:
    """
    Out-of-fold nuisance predictions for the conditional mean independence test.

    Attributes:
        mu_by_level: n x L, mu_hat(M_i, X_i, D in cell l)
        mu_complement: n x L, mu_hat(M_i, X_i, D not in cell l)
        p_by_level: n x L, P_hat(D in cell l | M_i, X_i)
        fold_of: Fold that produced each row's predictions
    """
    mu_by_level: np.ndarray
    mu_complement: np.ndarray
    p_by_level: np.ndarray
    fold_of: np.ndarray = field(default=None)

    def __post_init__(self):
        mu = np.asarray(self.mu_by_level, dtype=float)
        if mu.ndim != 2 or mu.shape[1] < 2:
            raise ArgumentError("mu_by_level must be an n x L matrix with L >= 2")
        for name in ("mu_complement", "p_by_level"):
            if np.shape(getattr(self, name)) != mu.shape:
                raise ArgumentError(f"{name} must have shape {mu.shape}")
        p = np.asarray(self.p_by_level, dtype=float)
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise ArgumentError("cell propensities must lie strictly inside (0, 1)")
        fold_of = np.zeros(mu.shape[0], dtype=np.int64) if self.fold_of is None else np.asarray(self.fold_of)

        object.__setattr__(self, "mu_by_level", _frozen(mu))
        object.__setattr__(self, "mu_complement", _frozen(self.mu_complement))
        object.__setattr__(self, "p_by_level", _frozen(p))
        object.__setattr__(self, "fold_of", fold_of)

    @classmethod
    def binary(cls, mu1, mu0, p, fold_of=None) -> "NuisanceBundle":
        """Bundle for cells {0}, {1} from mu(.,.,1), mu(.,.,0) and P(D=1|M,X)."""
        mu1, mu0, p = (np.asarray(a, dtype=float) for a in (mu1, mu0, p))
        return cls(
            mu_by_level=np.column_stack([mu0, mu1]),
            mu_complement=np.column_stack([mu1, mu0]),
            p_by_level=np.column_stack([1.0 - p, p]),
            fold_of=fold_of,
        )

    @property
    def n(self) -> int:
        return int(self.mu_by_level.shape[0])

    @property
    def n_cells(self) -> int:
        return int(self.mu_by_level.shape[1])


def _fit_predict(
    spec: LearnerSpec,
    features: np.ndarray,
    target: np.ndarray,
    train: np.ndarray,
    test: np.ndarray,
) -> np.ndarray:
    model = learners.fit(spec, features[train], target[train])
    return model.predict(features[test])


def _require(count: int, fold: int, cell, what: str) -> None:
    if count < 2:
        raise FoldDegeneracyError(fold, cell, f"{count} training observation(s) {what}")


def _map_folds(folds: FoldPlan, work: Callable[[int], object], threads: int) -> List:
    if threads > 1 and folds.k > 1:
        with ThreadPoolExecutor(max_workers=min(threads, folds.k)) as executor:
            return list(executor.map(work, range(folds.k)))
    return [work(k) for k in range(folds.k)]


def crossfit_nuisances(
    data: Dataset,
    partition: TreatmentPartition,
    folds: FoldPlan,
    spec: LearnerSpec,
    threads: int = 1,
) -> NuisanceBundle:
    """
    Cross-fit cell outcome means and cell propensities.

    For each fold k and cell l: a squared-loss model of Y on (M, X) among
    training rows with D in cell l, another among rows with D outside
    cell l, and a logistic model of 1{D in cell l} on (M, X). With two
    cells the complement models coincide with the other cell's models
    and only one propensity model is fitted.

    Raises:
        ArgumentError: If the fold plan does not match the data
        FoldDegeneracyError: If a training subset has fewer than 2 rows
            or a constant propensity target
    """
    if folds.n != data.n:
        raise ArgumentError(f"fold plan covers {folds.n} rows, data has {data.n}")

    features = data.features
    cells = partition.cell_of(data.d)
    n_cells = partition.n_cells
    squared = spec.with_family(LearnerFamily.SQUARED_LOSS)
    logistic = spec.with_family(LearnerFamily.LOGISTIC)

    def seeded(base: LearnerSpec, k: int, role: int, *keys: int) -> LearnerSpec:
        return base.with_seed(derive_seed(spec.seed, STREAM_LEARNER_CV, k, role, *keys))

    def work(k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        train, test = folds.train_indices(k), folds.test_indices(k)
        mu_in = np.empty((test.size, n_cells))
        mu_out = np.empty((test.size, n_cells))
        p = np.empty((test.size, n_cells))

        for cell in range(n_cells):
            inside = train[cells[train] == cell]
            outside = train[cells[train] != cell]
            _require(inside.size, k, cell, "with D in the cell")
            _require(outside.size, k, cell, "with D outside the cell")

            mu_in[:, cell] = _fit_predict(seeded(squared, k, ROLE_MU_IN, cell), features, data.y, inside, test)
            if n_cells > 2:
                mu_out[:, cell] = _fit_predict(seeded(squared, k, ROLE_MU_OUT, cell), features, data.y, outside, test)
                target = (cells == cell).astype(float)
                p[:, cell] = _fit_predict(seeded(logistic, k, ROLE_PROPENSITY, cell), features, target, train, test)

        if n_cells == 2:
            mu_out[:, 0], mu_out[:, 1] = mu_in[:, 1], mu_in[:, 0]
            target = (cells == 1).astype(float)
            p[:, 1] = _fit_predict(seeded(logistic, k, ROLE_PROPENSITY, 1), features, target, train, test)
            p[:, 0] = 1.0 - p[:, 1]

        logger.debug("Fold %d: fitted %d cells on %d rows", k, n_cells, train.size)
        return test, mu_in, mu_out, p

    mu_in = np.empty((data.n, n_cells))
    mu_out = np.empty((data.n, n_cells))
    p = np.empty((data.n, n_cells))
    for test, fold_mu_in, fold_mu_out, fold_p in _map_folds(folds, work, threads):
        mu_in[test], mu_out[test], p[test] = fold_mu_in, fold_mu_out, fold_p

    return NuisanceBundle(
        mu_by_level=mu_in,
        mu_complement=mu_out,
        p_by_level=p,
        fold_of=np.asarray(folds.assignment),
    )


@dataclass(frozen=True, eq=False)
class BdFdNuisances:
    """
    Out-of-fold nuisances for the back-door / front-door comparison.

    Attributes:
        q_hat: n x |D|, E_hat[Y | D=d, X_i]
        mu_hat: n x |M| x |D|, E_hat[Y | M=m, X_i, D=d]
        fd_hat: n x |D|, f_hat(d | X_i)
        fm_hat: n x |M| x |D|, f_hat(m | d, X_i)
        d_obs: Observed treatment codes
        m_obs: Observed mediator codes
        fold_of: Fold that produced each row's predictions
    """
    q_hat: np.ndarray
    mu_hat: np.ndarray
    fd_hat: np.ndarray
    fm_hat: np.ndarray
    d_obs: np.ndarray
    m_obs: np.ndarray
    fold_of: np.ndarray = field(default=None)

    def __post_init__(self):
        q, mu, fd, fm = (np.asarray(a, dtype=float) for a in (self.q_hat, self.mu_hat, self.fd_hat, self.fm_hat))
        n, n_d = q.shape
        n_m = mu.shape[1]
        if mu.shape != (n, n_m, n_d) or fm.shape != (n, n_m, n_d) or fd.shape != (n, n_d):
            raise ArgumentError("BD-FD nuisance arrays have inconsistent shapes")
        for name, probs, axis in (("f(d|X)", fd, 1), ("f(m|d,X)", fm, 1)):
            if probs.shape[axis] > 1 and (np.any(probs <= 0.0) or np.any(probs >= 1.0)):
                raise ArgumentError(f"{name} must lie strictly inside (0, 1)")
            if np.max(np.abs(probs.sum(axis=axis) - 1.0)) > 1e-8:
                raise ArgumentError(f"{name} must sum to 1 within 1e-8")

        d_obs = np.asarray(self.d_obs, dtype=np.int64)
        m_obs = np.asarray(self.m_obs, dtype=np.int64)
        if d_obs.shape != (n,) or m_obs.shape != (n,):
            raise ArgumentError("observed treatment and mediator codes must have length n")
        fold_of = np.zeros(n, dtype=np.int64) if self.fold_of is None else np.asarray(self.fold_of)

        for name, value in (("q_hat", q), ("mu_hat", mu), ("fd_hat", fd), ("fm_hat", fm)):
            object.__setattr__(self, name, _frozen(value))
        object.__setattr__(self, "d_obs", d_obs)
        object.__setattr__(self, "m_obs", m_obs)
        object.__setattr__(self, "fold_of", fold_of)

    @property
    def n(self) -> int:
        return int(self.q_hat.shape[0])

    @property
    def n_treatment_levels(self) -> int:
        return int(self.q_hat.shape[1])

    @property
    def n_mediator_levels(self) -> int:
        return int(self.mu_hat.shape[1])


def normalize_probabilities(probs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Clip to [1e-6, 1 - 1e-6] and renormalize along ``axis``."""
    clipped = np.clip(probs, PROB_CLIP, 1.0 - PROB_CLIP)
    return clipped / clipped.sum(axis=axis, keepdims=True)


def discrete_codes(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Code discrete values (vector, or matrix rows for joint mediators) as 0..K-1.

    Returns:
        (codes, levels) with levels[codes[i]] == values[i]
    """
    values = np.asarray(values)
    if values.ndim == 2 and values.shape[1] == 1:
        values = values[:, 0]
    if values.ndim == 2:
        if values.shape[1] == 0:
            raise ArgumentError("the BD-FD test needs at least one mediator column")
        levels, codes = np.unique(values, axis=0, return_inverse=True)
    else:
        levels, codes = np.unique(values, return_inverse=True)
    return np.asarray(codes, dtype=np.int64).reshape(-1), levels


def crossfit_bdfd(
    data: Dataset,
    folds: FoldPlan,
    spec: LearnerSpec,
    threads: int = 1,
) -> BdFdNuisances:
    """
    Cross-fit q(d, X), mu(m, X, d), f(d | X) and f(m | d, X).

    Every model uses the covariates X only. Multi-level probabilities are
    one-vs-rest logistic fits, clipped and renormalized.

    Raises:
        FoldDegeneracyError: If some (d, m) cell has fewer than 2 training
            rows or a propensity target is constant in a training split
    """
    if folds.n != data.n:
        raise ArgumentError(f"fold plan covers {folds.n} rows, data has {data.n}")

    d_codes, _ = discrete_codes(data.d)
    m_codes, _ = discrete_codes(data.m)
    n_d = int(d_codes.max()) + 1
    n_m = int(m_codes.max()) + 1
    if n_m > MAX_MEDIATOR_LEVELS:
        raise ArgumentError(
            f"the BD-FD test needs a discrete mediator (found {n_m} distinct levels, at most {MAX_MEDIATOR_LEVELS})"
        )
    if n_m < 2:
        logger.info("Mediator is constant; front-door terms collapse")
    x = data.x
    squared = spec.with_family(LearnerFamily.SQUARED_LOSS)
    logistic = spec.with_family(LearnerFamily.LOGISTIC)

    def seeded(base: LearnerSpec, k: int, role: int, *keys: int) -> LearnerSpec:
        return base.with_seed(derive_seed(spec.seed, STREAM_LEARNER_CV, k, role, *keys))

    def class_probabilities(k, labels, rows, test, n_classes, cell_key, *role) -> np.ndarray:
        out = np.ones((test.size, n_classes))
        if n_classes == 1:
            return out
        present = np.unique(labels[rows])
        if present.size < n_classes:
            raise FoldDegeneracyError(k, cell_key, "a level is absent from the training rows")
        classes = [1] if n_classes == 2 else range(n_classes)
        for c in classes:
            target = (labels == c).astype(float)
            out[:, c] = _fit_predict(seeded(logistic, k, *role, c), x, target, rows, test)
        if n_classes == 2:
            out[:, 0] = 1.0 - out[:, 1]
        return normalize_probabilities(out, axis=1)

    def work(k: int):
        train, test = folds.train_indices(k), folds.test_indices(k)
        q = np.empty((test.size, n_d))
        mu = np.empty((test.size, n_m, n_d))
        fm = np.empty((test.size, n_m, n_d))

        for d in range(n_d):
            rows_d = train[d_codes[train] == d]
            _require(rows_d.size, k, ("d", d), "with this treatment level")
            q[:, d] = _fit_predict(seeded(squared, k, ROLE_Q, d), x, data.y, rows_d, test)
            for m in range(n_m):
                rows_dm = rows_d[m_codes[rows_d] == m]
                _require(rows_dm.size, k, ("d", d, "m", m), "in this (d, m) cell")
                mu[:, m, d] = _fit_predict(seeded(squared, k, ROLE_MU_MD, d, m), x, data.y, rows_dm, test)
            fm[:, :, d] = class_probabilities(k, m_codes, rows_d, test, n_m, ("d", d), ROLE_MEDIATOR, d)

        fd = class_probabilities(k, d_codes, train, test, n_d, ("d", "all"), ROLE_TREATMENT)
        return test, q, mu, fd, fm

    q = np.empty((data.n, n_d))
    mu = np.empty((data.n, n_m, n_d))
    fd = np.empty((data.n, n_d))
    fm = np.empty((data.n, n_m, n_d))
    for test, fold_q, fold_mu, fold_fd, fold_fm in _map_folds(folds, work, threads):
        q[test], mu[test], fd[test], fm[test] = fold_q, fold_mu, fold_fd, fold_fm

    return BdFdNuisances(
        q_hat=q, mu_hat=mu, fd_hat=fd, fm_hat=fm,
        d_obs=d_codes, m_obs=m_codes, fold_of=np.asarray(folds.assignment),
    )

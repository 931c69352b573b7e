"""
Dataset representation, CSV ingestion, fold planning and trimming.

Every sample-level computation in the toolkit works on a ``Dataset``:
an immutable bundle of outcome, treatment codes, mediators and
covariates. Fold plans and trim rules are small immutable value objects
shared by the estimators.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from fullmed.errors import (
    ArgumentError,
    DataError,
    DataParseError,
    SchemaError,
    ValidationError,
)

logger = logging.getLogger(__name__)

ALL_REMAINING = "all-remaining"

# Cell contents treated as missing values
MISSING_TOKENS = ("", "NA", "N/A", "NaN", "nan", "null", "NULL", "None")


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


def _as_matrix(values, n: int, name: str) -> np.ndarray:
    matrix = np.asarray(values, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1) if matrix.size else np.empty((n, 0))
    if matrix.ndim != 2:
        raise ValidationError(f"{name} must be a vector or a matrix (got {matrix.ndim} dimensions)")
    return matrix


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Observed (Y, D, M, X) sample.

    Attributes:
        y: Outcome vector, length n
        d: Treatment codes (non-negative integers), length n; re-coded to
            0..L-1 in sorted order when they leave gaps
        m: Mediator matrix, n x k (k may be 0)
        x: Covariate matrix, n x p (p may be 0)
        outcome_name: Outcome column label
        treatment_name: Treatment column label
        mediator_names: Mediator column labels
        covariate_names: Covariate column labels
        treatment_labels: Original treatment value for each code
    """
    y: np.ndarray
    d: np.ndarray
    m: np.ndarray
    x: np.ndarray
    outcome_name: str = "y"
    treatment_name: str = "d"
    mediator_names: Tuple[str, ...] = ()
    covariate_names: Tuple[str, ...] = ()
    treatment_labels: Tuple = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1:
            raise ValidationError(f"outcome must be a vector (got shape {y.shape})")
        n = y.shape[0]
        if n < 2:
            raise ValidationError(f"need at least 2 observations (got {n})")

        d_raw = np.asarray(self.d, dtype=float)
        if d_raw.shape != (n,):
            raise ValidationError(f"treatment has length {d_raw.size}, expected {n}")
        if not np.all(np.isfinite(d_raw)):
            raise ValidationError("treatment contains missing or non-finite values")
        if np.any(d_raw != np.round(d_raw)) or np.any(d_raw < 0):
            raise ValidationError("treatment must be coded as non-negative integers")
        d = d_raw.astype(np.int64)

        m = _as_matrix(self.m, n, "mediators")
        x = _as_matrix(self.x, n, "covariates")
        for name, matrix in (("mediators", m), ("covariates", x)):
            if matrix.shape[0] != n:
                raise ValidationError(f"{name} have {matrix.shape[0]} rows, expected {n}")
        for name, values in (("outcome", y), ("mediators", m), ("covariates", x)):
            if not np.all(np.isfinite(values)):
                raise ValidationError(f"{name} contain missing or non-finite values")

        levels = np.unique(d)
        if levels.size < 2:
            raise ValidationError("treatment takes a single value; the test is vacuous")
        given_labels = tuple(self.treatment_labels)
        if given_labels and len(given_labels) <= levels[-1]:
            raise ValidationError(
                f"treatment_labels has {len(given_labels)} entries but the largest treatment code is {levels[-1]}"
            )
        labels = tuple(given_labels[c] for c in levels) if given_labels else tuple(int(c) for c in levels)
        if levels[-1] != levels.size - 1:
            logger.info("Re-coding treatment codes %s to 0..%d", levels.tolist(), levels.size - 1)
        d = np.searchsorted(levels, d)

        mediator_names = tuple(self.mediator_names) or tuple(f"m{j + 1}" for j in range(m.shape[1]))
        covariate_names = tuple(self.covariate_names) or tuple(f"x{j + 1}" for j in range(x.shape[1]))
        if len(mediator_names) != m.shape[1] or len(covariate_names) != x.shape[1]:
            raise ValidationError("column labels do not match the data shape")

        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "d", _frozen(d))
        object.__setattr__(self, "m", _frozen(m))
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "mediator_names", mediator_names)
        object.__setattr__(self, "covariate_names", covariate_names)
        object.__setattr__(self, "treatment_labels", labels)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def levels(self) -> np.ndarray:
        """Observed treatment codes, sorted."""
        return np.unique(self.d)

    @property
    def n_levels(self) -> int:
        return int(self.levels.size)

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.d == 0) | (self.d == 1)))

    @property
    def features(self) -> np.ndarray:
        """Mediators and covariates side by side, the regressors of the outcome model."""
        return np.hstack([self.m, self.x])

    def require_binary(self) -> None:
        """
        Raises:
            ValidationError: If the treatment is not coded 0/1
        """
        if not self.is_binary:
            raise ValidationError("this operation requires a binary treatment coded 0/1")

    def take(self, index: Sequence[int]) -> "Dataset":
        """Return the sub-sample at the given row indices."""
        index = np.asarray(index)
        return Dataset(
            y=self.y[index], d=self.d[index], m=self.m[index], x=self.x[index],
            outcome_name=self.outcome_name, treatment_name=self.treatment_name,
            mediator_names=self.mediator_names, covariate_names=self.covariate_names,
            treatment_labels=self.treatment_labels,
        )

    def describe(self) -> Dict[str, object]:
        """Summary used in report headers."""
        return {
            "n": self.n,
            "outcome": self.outcome_name,
            "treatment": self.treatment_name,
            "treatment_levels": [self.treatment_labels[int(c)] for c in self.levels],
            "mediators": list(self.mediator_names),
            "covariates": len(self.covariate_names),
        }


@dataclass(frozen=True)
class ColumnSchema:
    """
    Mapping of CSV columns to roles.

    ``covariates`` may be the string ``"all-remaining"`` to take every
    column not assigned to another role.
    """
    outcome: str
    treatment: str
    mediators: Tuple[str, ...] = ()
    covariates: Union[Tuple[str, ...], str] = ()

    def resolve(self, columns: Sequence[str]) -> Tuple[str, ...]:
        """
        Resolve the covariate list against the file's columns.

        Raises:
            SchemaError: If any role names a column that does not exist
        """
        columns = list(columns)
        if self.covariates == ALL_REMAINING:
            taken = {self.outcome, self.treatment, *self.mediators}
            covariates = tuple(c for c in columns if c not in taken)
        else:
            covariates = tuple(self.covariates)

        wanted = [self.outcome, self.treatment, *self.mediators, *covariates]
        missing = [c for c in wanted if c not in columns]
        if missing:
            raise SchemaError(
                f"column(s) not found: {', '.join(missing)} (available: {', '.join(columns)})"
            )
        return covariates


def _numeric_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    cells = frame[column].astype(str).str.strip()
    missing = cells.isin(MISSING_TOKENS)
    if missing.any():
        row = int(np.flatnonzero(missing.to_numpy())[0])
        raise ValidationError(f"missing value in column '{column}' at row {row + 1} (line {row + 2})")

    values = pd.to_numeric(cells, errors="coerce")
    bad = values.isna()
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataParseError(
            f"non-numeric value {cells.iloc[row]!r} in column '{column}' at row {row + 1} (line {row + 2})"
        )

    array = values.to_numpy(dtype=float)
    if not np.all(np.isfinite(array)):
        row = int(np.flatnonzero(~np.isfinite(array))[0])
        raise ValidationError(f"non-finite value in column '{column}' at row {row + 1} (line {row + 2})")
    return array


def _label(value: float):
    return int(value) if float(value).is_integer() else float(value)


def load_csv(path: Union[str, Path], schema: ColumnSchema) -> Dataset:
    """
    Load and validate a CSV file.

    Treatment values are re-coded to contiguous integers 0..L-1 in sorted
    order; the original labels are kept on the Dataset.

    Args:
        path: UTF-8, comma-separated file with a header row
        schema: Column-role mapping

    Returns:
        Validated Dataset

    Raises:
        DataError: If the file does not exist or cannot be read
        SchemaError: If a role names a missing column
        ValidationError: On a missing value (no imputation is done)
        DataParseError: On a non-numeric cell
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Data file not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataParseError(f"Could not read {path}: {e}") from e

    frame.columns = [str(c).strip() for c in frame.columns]
    covariates = schema.resolve(frame.columns)

    y = _numeric_column(frame, schema.outcome)
    d_values = _numeric_column(frame, schema.treatment)
    n = len(frame)
    m = np.column_stack([_numeric_column(frame, c) for c in schema.mediators]) if schema.mediators else np.empty((n, 0))
    x = np.column_stack([_numeric_column(frame, c) for c in covariates]) if covariates else np.empty((n, 0))

    labels, codes = np.unique(d_values, return_inverse=True)
    coding = {_label(v): i for i, v in enumerate(labels)}
    logger.info("Loaded %d rows from %s; treatment coding %s", n, path, coding)

    return Dataset(
        y=y, d=codes, m=m, x=x,
        outcome_name=schema.outcome,
        treatment_name=schema.treatment,
        mediator_names=tuple(schema.mediators),
        covariate_names=covariates,
        treatment_labels=tuple(coding),
    )


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Balanced assignment of n observations to K folds."""
    n: int
    k: int
    seed: int
    assignment: np.ndarray = field(repr=False)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)


def make_folds(n: int, k: int, seed: int) -> FoldPlan:
    """
    Randomly split n observations into k folds whose sizes differ by at most 1.

    Raises:
        ArgumentError: Unless 2 <= k <= n
    """
    if k < 2 or k > n:
        raise ArgumentError(f"fold count must satisfy 2 <= K <= n (got K={k}, n={n})")
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=np.int64)
    assignment[rng.permutation(n)] = np.arange(n) % k
    return FoldPlan(n=n, k=k, seed=seed, assignment=_frozen(assignment))


@dataclass(frozen=True)
class TrimRule:
    """Keep observations whose estimated propensities lie in [lower, upper]."""
    lower: float = 0.05
    upper: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.lower < 0.5:
            raise ArgumentError(f"trim lower bound must lie in (0, 0.5) (got {self.lower})")
        if not 0.5 < self.upper < 1.0:
            raise ArgumentError(f"trim upper bound must lie in (0.5, 1) (got {self.upper})")


@dataclass(frozen=True, eq=False)
class TrimResult:
    """Indices kept by a trim rule plus bookkeeping."""
    kept: np.ndarray
    n_kept: int
    n_discarded: int


def apply_trim(p_hat: np.ndarray, rule: TrimRule) -> TrimResult:
    """
    Apply a trim rule to a vector (or n x L matrix) of propensities.

    With a matrix, an observation is kept only if every entry of its row
    lies inside the bounds.

    Raises:
        ArgumentError: If any propensity is outside [0, 1]
    """
    probs = np.asarray(p_hat, dtype=float)
    if probs.ndim == 1:
        probs = probs[:, None]
    if not np.all(np.isfinite(probs)) or np.any(probs < 0.0) or np.any(probs > 1.0):
        raise ArgumentError("propensities must lie in [0, 1]")

    inside = np.all((probs >= rule.lower) & (probs <= rule.upper), axis=1)
    kept = np.flatnonzero(inside)
    return TrimResult(kept=kept, n_kept=int(kept.size), n_discarded=int(probs.shape[0] - kept.size))

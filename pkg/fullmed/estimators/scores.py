"""
Doubly robust score functions of the conditional mean independence test.

Both scores are linear in theta: psi(W, theta, eta) = psi(W, 0, eta) - theta.
Functions accept full-length vectors and an optional index ``i`` (an int
or an index array); they return a float for a scalar index and a vector
otherwise.
"""

from typing import Optional, Union

import numpy as np

from fullmed.config import ScoreKind
from fullmed.errors import ArgumentError, InternalScoreError
from fullmed.estimators.crossfit import NuisanceBundle
from fullmed.estimators.partition import TreatmentPartition

Index = Optional[Union[int, np.ndarray, slice]]


def _pick(values: np.ndarray, i: Index) -> np.ndarray:
    return values if i is None else values[i]


def _out(values: np.ndarray):
    return float(values) if np.ndim(values) == 0 else values


def _check_propensity(p: np.ndarray) -> None:
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise InternalScoreError("a propensity of exactly 0 or 1 reached the score")


def cell_terms(y, indicator, mu_in, mu_out, p):
    """Contrast mu_in - mu_out and the inverse-propensity residual contrast."""
    _check_propensity(p)
    delta = mu_in - mu_out
    residual = (y - mu_in) * indicator / p - (y - mu_out) * (1.0 - indicator) / (1.0 - p)
    return delta, residual


def score_binary(y, d, bundle: NuisanceBundle, theta: float = 0.0, i: Index = None):
    """
    Score for a binary treatment.

    Delta^2 + 2 Delta R + Delta + R - theta, with Delta = mu1 - mu0 and
    R = (Y - mu1) D / p - (Y - mu0)(1 - D) / (1 - p).

    Args:
        y: Outcomes
        d: 0/1 treatment (indicator of the second cell)
        bundle: Two-cell nuisance bundle
        theta: Parameter value
        i: Optional observation index

    Raises:
        ArgumentError: If the bundle does not have exactly two cells
        InternalScoreError: If a propensity is 0 or 1
    """
    if bundle.n_cells != 2:
        raise ArgumentError(f"binary score needs a two-cell bundle (got {bundle.n_cells} cells)")
    y = _pick(np.asarray(y, dtype=float), i)
    d = _pick(np.asarray(d, dtype=float), i)
    mu0 = _pick(bundle.mu_by_level[:, 0], i)
    mu1 = _pick(bundle.mu_by_level[:, 1], i)
    p = _pick(bundle.p_by_level[:, 1], i)

    delta, residual = cell_terms(y, d, mu1, mu0, p)
    return _out(delta ** 2 + 2.0 * delta * residual + delta + residual - theta)


def score_multivalued(
    y, d, bundle: NuisanceBundle, partition: TreatmentPartition, theta: float = 0.0, i: Index = None
):
    """
    Score for a treatment partitioned into L cells.

    Sum over cells of Delta_l^2 + 2 Delta_l R_l + Delta_l + R_l, minus theta,
    where Delta_l = mu(M, X, D in l) - mu(M, X, D not in l) and R_l is the
    matching inverse-propensity residual contrast with p_l.
    """
    if bundle.n_cells != partition.n_cells:
        raise ArgumentError("bundle and partition disagree on the number of cells")
    y = _pick(np.asarray(y, dtype=float), i)
    d = _pick(np.asarray(d), i)

    total = np.zeros_like(y, dtype=float)
    for cell in range(partition.n_cells):
        delta, residual = cell_terms(
            y,
            partition.indicator(np.atleast_1d(d), cell).reshape(np.shape(y)),
            _pick(bundle.mu_by_level[:, cell], i),
            _pick(bundle.mu_complement[:, cell], i),
            _pick(bundle.p_by_level[:, cell], i),
        )
        total = total + delta ** 2 + 2.0 * delta * residual + delta + residual
    return _out(total - theta)


def resolve_score_kind(kind: ScoreKind, partition: TreatmentPartition) -> ScoreKind:
    """AUTO picks the binary score for two cells and the multivalued one otherwise."""
    kind = ScoreKind(kind)
    if kind == ScoreKind.AUTO:
        return ScoreKind.BINARY if partition.is_binary else ScoreKind.MULTIVALUED
    if kind == ScoreKind.BINARY and not partition.is_binary:
        raise ArgumentError(f"binary score needs two cells (partition has {partition.n_cells})")
    return kind


def score_values(
    kind: ScoreKind,
    y: np.ndarray,
    d: np.ndarray,
    bundle: NuisanceBundle,
    partition: TreatmentPartition,
    theta: float = 0.0,
) -> np.ndarray:
    """Score of every observation under the resolved score kind."""
    kind = resolve_score_kind(kind, partition)
    if kind == ScoreKind.BINARY:
        return score_binary(y, partition.indicator(d, 1), bundle, theta)
    return score_multivalued(y, d, bundle, partition, theta)

"""
DML test comparing back-door and front-door conditional means.

With discrete treatment and mediator, the back-door mean q(d, x) and the
front-door representation zeta(d, x) coincide under the testable
implication. The score subtracts the doubly robust corrections of both
(``r_term`` and ``s_term``) and is evaluated at each observation's own
treatment level.
"""

import logging
from typing import Optional, Union

import numpy as np

from fullmed.config import Alternative, TestKind, ZetaMode
from fullmed.data import Dataset, FoldPlan, TrimRule, apply_trim
from fullmed.errors import ArgumentError, TestInfeasibleError
from fullmed.estimators.ci_test import TestResult, summarize_scores
from fullmed.estimators.crossfit import BdFdNuisances, crossfit_bdfd
from fullmed.learners.base import LearnerSpec

logger = logging.getLogger(__name__)

Level = Union[int, np.ndarray]


def _levels(bundle: BdFdNuisances, d: Level) -> np.ndarray:
    levels = np.broadcast_to(np.asarray(d, dtype=np.int64), (bundle.n,))
    if np.any(levels < 0) or np.any(levels >= bundle.n_treatment_levels):
        raise ArgumentError(f"treatment level outside 0..{bundle.n_treatment_levels - 1}")
    return levels


def _pick(values: np.ndarray, i):
    values = values if i is None else values[i]
    return float(values) if np.ndim(values) == 0 else values


def nested_means(bundle: BdFdNuisances) -> np.ndarray:
    """n x |M| matrix of nu_hat(m, X_i) = sum_d mu_hat(m, X_i, d) f_hat(d | X_i)."""
    return np.einsum("imd,id->im", bundle.mu_hat, bundle.fd_hat)


def nested_mean(bundle: BdFdNuisances, m: int, i=None):
    """nu_hat(m, X_i)."""
    if not 0 <= m < bundle.n_mediator_levels:
        raise ArgumentError(f"mediator level {m} outside 0..{bundle.n_mediator_levels - 1}")
    return _pick(nested_means(bundle)[:, m], i)


def zeta(bundle: BdFdNuisances, d: Level, i=None, mode: ZetaMode = ZetaMode.OBSERVED):
    """
    Front-door representation at treatment level d.

    observed:   sum_m mu_hat(m, X_i, D_i) f_hat(m | d, X_i)
    integrated: sum_m nu_hat(m, X_i) f_hat(m | d, X_i)
    """
    rows = np.arange(bundle.n)
    levels = _levels(bundle, d)
    mediator_probs = bundle.fm_hat[rows, :, levels]
    if ZetaMode(mode) == ZetaMode.INTEGRATED:
        means = nested_means(bundle)
    else:
        means = bundle.mu_hat[rows, :, bundle.d_obs]
    return _pick(np.sum(means * mediator_probs, axis=1), i)


def r_term(y, d_obs, bundle: BdFdNuisances, d: Level, i=None):
    """Back-door correction (Y_i - q_hat(d, X_i)) 1{D_i = d} / f_hat(d | X_i)."""
    rows = np.arange(bundle.n)
    levels = _levels(bundle, d)
    y = np.asarray(y, dtype=float)
    hit = (np.asarray(d_obs) == levels).astype(float)
    values = (y - bundle.q_hat[rows, levels]) * hit / bundle.fd_hat[rows, levels]
    return _pick(values, i)


def s_term(y, d_obs, m_obs, bundle: BdFdNuisances, d: Level, i=None):
    """
    Front-door correction.

    (Y_i - mu_hat(M_i, X_i, D_i)) f_hat(M_i | d, X_i) / f_hat(M_i | D_i, X_i)
    + 1{D_i = d} / f_hat(d | X_i)
      * [nu_hat(M_i, X_i) - sum_{d', m} mu_hat(m, X_i, d') f_hat(m | D_i, X_i) f_hat(d' | X_i)]
    """
    rows = np.arange(bundle.n)
    levels = _levels(bundle, d)
    y = np.asarray(y, dtype=float)
    d_obs = np.asarray(d_obs, dtype=np.int64)
    m_obs = np.asarray(m_obs, dtype=np.int64)

    ratio = bundle.fm_hat[rows, m_obs, levels] / bundle.fm_hat[rows, m_obs, d_obs]
    first = (y - bundle.mu_hat[rows, m_obs, d_obs]) * ratio

    nu = nested_means(bundle)
    mixed = np.sum(nu * bundle.fm_hat[rows, :, d_obs], axis=1)
    hit = (d_obs == levels).astype(float)
    second = hit / bundle.fd_hat[rows, levels] * (nu[rows, m_obs] - mixed)
    return _pick(first + second, i)


def bdfd_scores(
    y: np.ndarray,
    bundle: BdFdNuisances,
    theta: float = 0.0,
    mode: ZetaMode = ZetaMode.OBSERVED,
) -> np.ndarray:
    """
    Score at each observation's own treatment level.

    (q - zeta)^2 + 2 (q - zeta)(r - s) + (q - zeta) + (r - s) - theta.
    """
    rows = np.arange(bundle.n)
    own = bundle.d_obs
    contrast = bundle.q_hat[rows, own] - zeta(bundle, own, mode=mode)
    correction = r_term(y, own, bundle, own) - s_term(y, own, bundle.m_obs, bundle, own)
    return contrast ** 2 + 2.0 * contrast * correction + contrast + correction - theta


def trim_columns(bundle: BdFdNuisances) -> np.ndarray:
    """Propensities subject to trimming: f_hat(. | X_i) and f_hat(M_i | D_i, X_i)."""
    columns = [bundle.fd_hat]
    if bundle.n_mediator_levels > 1:
        rows = np.arange(bundle.n)
        columns.append(bundle.fm_hat[rows, bundle.m_obs, bundle.d_obs][:, None])
    return np.hstack(columns)


def estimate_bdfd(
    data: Dataset,
    folds: FoldPlan,
    spec: LearnerSpec,
    trim: Optional[TrimRule],
    *,
    nuisances: Optional[BdFdNuisances] = None,
    zeta_mode: ZetaMode = ZetaMode.OBSERVED,
    alternative: Alternative = Alternative.TWO_SIDED,
    threads: int = 1,
) -> TestResult:
    """
    Test equality of back-door and front-door conditional means.

    Args:
        data: Sample with discrete treatment and mediator(s)
        folds: Cross-fitting fold plan
        spec: Learner settings
        trim: Trim rule applied to f_hat(d | X) and f_hat(M | D, X), or None
        nuisances: Precomputed nuisances (skips cross-fitting)
        zeta_mode: Front-door contrast variant
        alternative: Sidedness of the p-value
        threads: Parallel workers for per-fold fitting

    Raises:
        FoldDegeneracyError: If a (d, m) training cell is empty
        TestInfeasibleError: If fewer than 2 observations survive trimming
    """
    bundle = nuisances if nuisances is not None else crossfit_bdfd(data, folds, spec, threads)
    if bundle.n != data.n:
        raise ArgumentError("nuisance bundle does not match the data")

    if trim is None:
        kept = np.arange(data.n)
    else:
        kept = apply_trim(trim_columns(bundle), trim).kept
    if kept.size < 2:
        raise TestInfeasibleError(
            f"{kept.size} of {data.n} observations survive trimming; at least 2 are needed"
        )

    scores = bdfd_scores(data.y, bundle, mode=zeta_mode)[kept]
    theta, se, t, p = summarize_scores(scores, alternative)

    level_means = {}
    for d in range(bundle.n_treatment_levels):
        level_means[str(d)] = {
            "q": float(np.mean(bundle.q_hat[kept, d])),
            "zeta": float(np.mean(zeta(bundle, d, mode=zeta_mode)[kept])),
        }

    return TestResult(
        theta_hat=theta,
        se=se,
        t_stat=t,
        p_value=p,
        n=data.n,
        n_effective=int(kept.size),
        per_split=[(theta, se)],
        alternative=Alternative(alternative),
        test=TestKind.BDFD,
        diagnostics={
            "n_discarded": int(data.n - kept.size),
            "score": f"bdfd-{ZetaMode(zeta_mode)}",
            "cells": [[d] for d in range(bundle.n_treatment_levels)],
            "trim": None if trim is None else [trim.lower, trim.upper],
            "level_means": level_means,
        },
    )

"""
Ground truth for the sample-level tests.

True nuisances are read off the observational joint table of a
``DiscretePopulation``, so feeding them to the estimators removes all
learning error. ``support_dataset`` lists every cell with positive mass
together with its probability, which turns sample means into exact
expectations.
"""

import logging
from typing import Tuple

import numpy as np

from fullmed.config import ScoreKind, ZetaMode
from fullmed.data import Dataset
from fullmed.errors import ArgumentError
from fullmed.estimators.crossfit import BdFdNuisances, NuisanceBundle
from fullmed.estimators.partition import TreatmentPartition
from fullmed.estimators.scores import resolve_score_kind
from fullmed.oracle.population import DiscretePopulation, JointTable, marginalize

logger = logging.getLogger(__name__)


def _codes(data: Dataset) -> Tuple[np.ndarray, np.ndarray]:
    if data.m.shape[1] != 1 or data.x.shape[1] != 1:
        raise ArgumentError("population oracles expect one mediator code column and one covariate code column")
    return data.m[:, 0].astype(np.int64), data.x[:, 0].astype(np.int64)


def support_dataset(pop: DiscretePopulation) -> Tuple[Dataset, np.ndarray]:
    """
    Every (x, d, m, y) cell with positive probability, as a dataset plus cell weights.

    Weighted means over this dataset are exact population expectations.
    """
    joint = marginalize(pop)
    x, d, m, y = np.nonzero(joint.prob > 0)
    data = Dataset(
        y=pop.y_values[y],
        d=d,
        m=m.astype(float)[:, None],
        x=x.astype(float)[:, None],
        mediator_names=("m",),
        covariate_names=("x",),
    )
    return data, joint.prob[x, d, m, y]


def cell_means(joint: JointTable, partition: TreatmentPartition) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Cell-level conditional means and propensities indexed [x, m, cell].

    Returns:
        (mu_in, mu_out, p_in): E[Y | D in l, m, x], E[Y | D not in l, m, x]
        and P(D in l | m, x); NaN where undefined
    """
    n_x, n_d, n_m, _ = joint.shape
    shape = (n_x, n_m, partition.n_cells)
    mu_in, mu_out, p_in = np.full(shape, np.nan), np.full(shape, np.nan), np.full(shape, np.nan)
    total = joint.p_xm
    for cell, levels in enumerate(partition.cells):
        inside = np.isin(np.arange(n_d), levels)
        for x in range(n_x):
            for m in range(n_m):
                if total[x, m] <= 0:
                    continue
                law_in = joint.prob[x, inside, m, :].sum(axis=0)
                law_out = joint.prob[x, ~inside, m, :].sum(axis=0)
                p_in[x, m, cell] = law_in.sum() / total[x, m]
                if law_in.sum() > 0:
                    mu_in[x, m, cell] = law_in @ joint.y_values / law_in.sum()
                if law_out.sum() > 0:
                    mu_out[x, m, cell] = law_out @ joint.y_values / law_out.sum()
    return mu_in, mu_out, p_in


def true_nuisances(pop: DiscretePopulation, partition: TreatmentPartition, data: Dataset) -> NuisanceBundle:
    """
    Exact nuisances of the conditional mean independence test at each row of ``data``.

    Raises:
        ArgumentError: If a row's (m, x) cell lacks common support for some treatment cell
    """
    m, x = _codes(data)
    if partition.cells and max(max(cell) for cell in partition.cells) >= pop.n_d:
        raise ArgumentError("partition refers to treatment levels the population lacks")
    mu_in, mu_out, p_in = cell_means(marginalize(pop), partition)
    bundle_arrays = (mu_in[x, m], mu_out[x, m], p_in[x, m])
    if any(np.any(np.isnan(a)) for a in bundle_arrays):
        raise ArgumentError("some (m, x) cell lacks common support across treatment cells")
    return NuisanceBundle(mu_by_level=bundle_arrays[0], mu_complement=bundle_arrays[1], p_by_level=bundle_arrays[2])


def true_theta(pop: DiscretePopulation, partition: TreatmentPartition, score: ScoreKind = ScoreKind.AUTO) -> float:
    """
    Target of the conditional mean independence test, by exhaustive summation.

    Binary score: E[Delta^2 + Delta] with Delta = mu(M, X, 1) - mu(M, X, 0).
    Multivalued: E[sum_l Delta_l^2 + Delta_l] with cell-versus-complement contrasts.
    """
    joint = marginalize(pop)
    kind = resolve_score_kind(score, partition)
    mu_in, mu_out, _ = cell_means(joint, partition)
    if kind == ScoreKind.BINARY:
        delta = (mu_in[:, :, 1] - mu_in[:, :, 0])[..., None]
    else:
        delta = mu_in - mu_out

    support = joint.p_xm > 0
    if np.any(np.isnan(delta[support])):
        raise ArgumentError("some (m, x) cell lacks common support across treatment cells")
    contributions = np.sum(delta ** 2 + delta, axis=2)
    return float(np.sum(joint.p_xm[support] * contributions[support]))


def bdfd_tables(joint: JointTable) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    q[x, d], mu[x, m, d], f_d[x, d] and f_m[x, m, d] from the joint table.

    Raises:
        ArgumentError: If some (d, m, x) cell with P(x) > 0 has zero mass
    """
    q = joint.y_given_dx() @ joint.y_values
    mu = np.transpose(joint.outcome_mean(), (0, 2, 1))
    f_d = joint.d_given_x()
    f_m = np.transpose(joint.m_given_dx(), (0, 2, 1))
    support = joint.p_x > 0
    if any(np.any(np.isnan(table[support])) for table in (q, mu, f_d, f_m)):
        raise ArgumentError("the BD-FD nuisances need every (d, m) cell populated")
    return q, mu, f_d, f_m


def true_bdfd_nuisances(pop: DiscretePopulation, data: Dataset) -> BdFdNuisances:
    """Exact BD-FD nuisances at each row of ``data`` (codes as in ``sample``)."""
    m, x = _codes(data)
    q, mu, f_d, f_m = bdfd_tables(marginalize(pop))
    return BdFdNuisances(
        q_hat=q[x],
        mu_hat=mu[x],
        fd_hat=f_d[x],
        fm_hat=f_m[x],
        d_obs=data.d,
        m_obs=m,
    )


def true_theta_bar(pop: DiscretePopulation, mode: ZetaMode = ZetaMode.OBSERVED) -> float:
    """
    Target of the BD-FD test: E[(q(D, X) - zeta(D, X))^2 + (q(D, X) - zeta(D, X))].

    With the observed variant zeta(D, X) sums mu(m, X, D) f(m | D, X), which
    equals q(D, X), so the target is zero in every population. The
    integrated variant uses nu(m, X) = sum_d' mu(m, X, d') f(d' | X).
    """
    joint = marginalize(pop)
    q, mu, f_d, f_m = bdfd_tables(joint)
    if ZetaMode(mode) == ZetaMode.INTEGRATED:
        nu = np.einsum("xmd,xd->xm", mu, f_d)
        zeta = np.einsum("xm,xmd->xd", nu, f_m)
    else:
        zeta = np.einsum("xmd,xmd->xd", mu, f_m)
    contrast = q - zeta
    support = joint.p_xd > 0
    return float(np.sum(joint.p_xd[support] * (contrast[support] ** 2 + contrast[support])))

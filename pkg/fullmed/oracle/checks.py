"""
Exact checks on observational joint tables and structural effects.

- check_ti: Y independent of D given (M, X)
- check_bdfd: back-door and front-door conditional laws coincide
- check_separability: P(y | d, m, x) additive in d and m
- effects: ATE, CDE, NDE and NIE by kernel surgery
- front_door_population: random worlds satisfying the front-door equality
- find_bdfd_not_ti: randomized search for populations where the front-door
  equality holds without the testable implication
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import null_space

from fullmed.errors import AmbiguousCheckError, ArgumentError, PopulationError
from fullmed.oracle.population import (
    MAX_OBSERVED_SUPPORT,
    DiscretePopulation,
    JointTable,
    marginalize,
)
from fullmed.utils.seeding import STREAM_SEARCH, make_rng

logger = logging.getLogger(__name__)

HOLDS_TOL = 1e-9
FAILS_TOL = 0.01


@dataclass(frozen=True)
class CheckResult:
    """Outcome of an exact check: verdict and maximum absolute deviation."""
    name: str
    holds: bool
    deviation: float

    def to_dict(self) -> Dict[str, Any]:
        return {"check": self.name, "holds": self.holds, "deviation": self.deviation}


def classify(name: str, deviation: float, strict: bool = False) -> CheckResult:
    """
    Turn a deviation into a verdict.

    Raises:
        AmbiguousCheckError: If strict and the deviation falls between the
            "holds" and "fails" thresholds
    """
    deviation = float(deviation)
    if strict and HOLDS_TOL <= deviation <= FAILS_TOL:
        raise AmbiguousCheckError(name, deviation)
    return CheckResult(name=name, holds=deviation < HOLDS_TOL, deviation=deviation)


def ti_deviation(joint: JointTable) -> float:
    """Largest spread across d of P(y | d, m, x) over cells with positive mass."""
    cond = joint.y_given_dmx()
    mass = joint.p_xdm
    n_x, _, n_m, _ = joint.shape
    worst = 0.0
    for x in range(n_x):
        for m in range(n_m):
            support = mass[x, :, m] > 0
            if support.sum() < 2:
                continue
            rows = cond[x, support, m, :]
            worst = max(worst, float(np.max(rows.max(axis=0) - rows.min(axis=0))))
    return worst


def check_ti(joint: JointTable, strict: bool = False) -> CheckResult:
    """Exact check of the testable implication Y independent of D given M, X."""
    return classify("ti", ti_deviation(joint), strict)


def front_door_law(joint: JointTable) -> np.ndarray:
    """
    sum_m P(m | d, x) sum_d' P(y | d', m, x) P(d' | x), indexed [x, d, y].

    Raises:
        PopulationError: If some P(y | d', m, x) needed by the sum is undefined
    """
    cond_y = joint.y_given_dmx()
    cond_m = joint.m_given_dx()
    cond_d = joint.d_given_x()
    n_x, n_d, n_m, n_y = joint.shape
    law = np.full((n_x, n_d, n_y), np.nan)
    for x in range(n_x):
        for d in range(n_d):
            if joint.p_xd[x, d] <= 0:
                continue
            total = np.zeros(n_y)
            for m in range(n_m):
                if cond_m[x, d, m] <= 0:
                    continue
                inner = np.zeros(n_y)
                for d_prime in range(n_d):
                    if cond_d[x, d_prime] <= 0:
                        continue
                    if joint.p_xdm[x, d_prime, m] <= 0:
                        raise PopulationError(
                            f"front-door law undefined: P(d={d_prime}, m={m}, x={x}) = 0"
                        )
                    inner += cond_y[x, d_prime, m] * cond_d[x, d_prime]
                total += cond_m[x, d, m] * inner
            law[x, d] = total
    return law


def bdfd_deviation(joint: JointTable) -> float:
    back_door = joint.y_given_dx()
    front_door = front_door_law(joint)
    support = joint.p_xd > 0
    return float(np.max(np.abs(back_door[support] - front_door[support])))


def check_bdfd(joint: JointTable, strict: bool = False) -> CheckResult:
    """Exact check that P(y | d, x) equals its front-door representation for all (y, d, x)."""
    return classify("bdfd", bdfd_deviation(joint), strict)


def separability_residual(joint: JointTable) -> float:
    """
    Largest interaction residual of P(y | ., ., x) after double-centering.

    Raises:
        ArgumentError: If some (d, m, x) cell with P(x) > 0 has zero mass
    """
    cond = joint.y_given_dmx()
    worst = 0.0
    for x in range(joint.shape[0]):
        if joint.p_x[x] <= 0:
            continue
        block = cond[x]
        if np.any(np.isnan(block)):
            raise ArgumentError(f"separability needs every (d, m) cell populated at x={x}")
        for y in range(joint.shape[3]):
            matrix = block[:, :, y]
            residual = (
                matrix
                - matrix.mean(axis=1, keepdims=True)
                - matrix.mean(axis=0, keepdims=True)
                + matrix.mean()
            )
            worst = max(worst, float(np.max(np.abs(residual))))
    return worst


def check_separability(joint: JointTable, tol: float = HOLDS_TOL) -> bool:
    """True when P(y | d, m, x) = alpha(d, x) + beta(m, x) within tol for every (y, x)."""
    return separability_residual(joint) <= tol


@dataclass
class EffectReport:
    """
    Structural effects of a binary contrast (levels 1 versus 0).

    potential_outcomes[d][e] holds E[Y(d, M(e))]; total_effects[a][b] holds
    E[Y(a, M(a))] - E[Y(b, M(b))] for every pair of levels.
    """
    ate: float
    cde: List[float]
    nde: List[float]
    nie: List[float]
    potential_outcomes: List[List[float]] = field(default_factory=list)
    total_effects: List[List[float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ate": self.ate,
            "cde": self.cde,
            "nde": self.nde,
            "nie": self.nie,
            "potential_outcomes": self.potential_outcomes,
            "total_effects": self.total_effects,
        }


def effects(pop: DiscretePopulation) -> EffectReport:
    """
    Effects by setting the D and M inputs of the kernels and summing out X and U.

    NDE(d) = E[Y(1, M(d)) - Y(0, M(d))] and NIE(d) = E[Y(d, M(1)) - Y(d, M(0))],
    so ATE = NDE(1) + NIE(0) = NDE(0) + NIE(1).
    """
    weights = np.outer(pop.p_x, pop.p_u)
    mean_y = pop.p_y @ pop.y_values
    # E[Y(d, M(e))]
    outcomes = np.einsum("xu,exum,dmxu->de", weights, pop.p_m, mean_y)
    controlled = np.einsum("xu,dmxu->dm", weights, mean_y)

    own = np.diag(outcomes)
    return EffectReport(
        ate=float(outcomes[1, 1] - outcomes[0, 0]),
        cde=[float(v) for v in controlled[1] - controlled[0]],
        nde=[float(outcomes[1, e] - outcomes[0, e]) for e in (0, 1)],
        nie=[float(outcomes[d, 1] - outcomes[d, 0]) for d in (0, 1)],
        potential_outcomes=outcomes.tolist(),
        total_effects=(own[:, None] - own[None, :]).tolist(),
    )


def _front_door_constraints(pi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """
    Linear map G -> P(y|d,x) - front-door law, for G[d, m] = P(y | d, m, x) at one (x, y).

    pi[d] is P(d | x) and rho[d, m] is P(m | d, x); G is flattened row-major.
    """
    n_d, n_m = rho.shape
    constraints = np.zeros((n_d, n_d * n_m))
    for d in range(n_d):
        for m in range(n_m):
            constraints[d, d * n_m + m] += rho[d, m]
            for d_prime in range(n_d):
                constraints[d, d_prime * n_m + m] -= rho[d, m] * pi[d_prime]
    return constraints


def _separable_basis(n_d: int, n_m: int) -> np.ndarray:
    """Columns map (alpha_d, beta_m) to G[d, m] = alpha_d + beta_m."""
    basis = np.zeros((n_d * n_m, n_d + n_m))
    for d in range(n_d):
        for m in range(n_m):
            basis[d * n_m + m, d] = 1.0
            basis[d * n_m + m, n_d + m] = 1.0
    return basis


def _outcome_kernel(
    rng: np.random.Generator,
    pi: np.ndarray,
    rho: np.ndarray,
    n_y: int,
    separable: bool,
) -> Optional[np.ndarray]:
    """
    Draw P(y | d, m) satisfying the front-door equality at one x.

    Every y-slice moves inside the null space of the constraints around the
    uniform law; centering across y keeps the rows normalized.
    """
    n_d, n_m = rho.shape
    constraints = _front_door_constraints(pi, rho)
    if separable:
        lift = _separable_basis(n_d, n_m)
        directions = lift @ null_space(constraints @ lift)
    else:
        directions = null_space(constraints)
    if directions.shape[1] == 0:
        return None

    noise = directions @ rng.standard_normal((directions.shape[1], n_y))
    noise -= noise.mean(axis=1, keepdims=True)
    spread = np.max(np.abs(noise))
    if spread < 1e-12:
        return None
    kernel = 1.0 / n_y + (0.9 / n_y) * noise / spread
    return kernel.reshape(n_d, n_m, n_y)


def front_door_population(
    rng: np.random.Generator,
    sizes: Tuple[int, int, int, int] = (2, 2, 2, 1),
    separable: bool = False,
    n_u: int = 2,
) -> Optional[DiscretePopulation]:
    """
    Draw a population whose outcome kernel satisfies the front-door equality.

    D and M share a latent confounder; half the draws give M a first stage
    that does not depend on D. The outcome kernel ignores U and is built
    from the null space of the front-door constraints at every x.

    Args:
        rng: Random generator
        sizes: Support sizes (|Y|, |D|, |M|, |X|)
        separable: Restrict outcome kernels to alpha(d, x) + beta(m, x)
        n_u: Latent support size

    Returns:
        The population, or None when some null space is empty
    """
    n_y, n_d, n_m, n_x = sizes
    p_x = rng.dirichlet(np.ones(n_x))
    p_u = rng.dirichlet(np.ones(n_u))
    p_d = rng.dirichlet(np.ones(n_d), size=(n_x, n_u))
    if rng.random() < 0.5:
        first_stage = rng.dirichlet(np.ones(n_m), size=n_x)
        p_m = np.broadcast_to(first_stage[None, :, None, :], (n_d, n_x, n_u, n_m)).copy()
    else:
        p_m = rng.dirichlet(np.ones(n_m), size=(n_d, n_x, n_u))

    # Observational P(d | x) and P(m | d, x) do not depend on the outcome kernel
    joint_dm = np.einsum("x,u,xud,dxum->xdm", p_x, p_u, p_d, p_m)
    p_xd = joint_dm.sum(axis=2)
    pi = p_xd / p_xd.sum(axis=1, keepdims=True)
    rho = joint_dm / p_xd[..., None]

    outcome = np.empty((n_d, n_m, n_x, n_y))
    for x in range(n_x):
        kernel = _outcome_kernel(rng, pi[x], rho[x], n_y, separable)
        if kernel is None:
            return None
        outcome[:, :, x, :] = kernel

    p_y = np.broadcast_to(outcome[:, :, :, None, :], (n_d, n_m, n_x, n_u, n_y))
    return DiscretePopulation(
        y_values=np.arange(n_y, dtype=float),
        p_x=p_x,
        p_u=p_u,
        p_d=p_d,
        p_m=p_m,
        p_y=np.ascontiguousarray(p_y),
    )


def find_bdfd_not_ti(
    budget: int,
    seed: int,
    sizes: Tuple[int, int, int, int] = (2, 2, 2, 1),
    separable: bool = False,
    n_u: int = 2,
) -> Optional[DiscretePopulation]:
    """
    Randomized search for a population where the front-door equality holds but
    the testable implication fails.

    Each trial draws a candidate with ``front_door_population`` and verifies
    both conditions exactly.

    Args:
        budget: Maximum number of trials
        seed: Search seed
        sizes: Support sizes (|Y|, |D|, |M|, |X|)
        separable: Restrict outcome kernels to alpha(d, x) + beta(m, x)
        n_u: Latent support size

    Returns:
        The first witness found, or None when the budget is exhausted
        (which proves nothing about existence)
    """
    if budget < 1:
        raise ArgumentError("search budget must be at least 1")
    n_d = sizes[1]
    if min(sizes) < 1 or n_d < 2 or max(sizes) > MAX_OBSERVED_SUPPORT:
        raise ArgumentError(f"support sizes must lie in 1..{MAX_OBSERVED_SUPPORT} with |D| >= 2")

    rng = make_rng(seed, STREAM_SEARCH)
    for trial in range(budget):
        pop = front_door_population(rng, sizes, separable, n_u)
        if pop is None:
            continue
        joint = marginalize(pop)
        if bdfd_deviation(joint) < HOLDS_TOL and ti_deviation(joint) > FAILS_TOL:
            logger.info("Witness found after %d trials", trial + 1)
            return pop

    logger.info("No witness within %d trials", budget)
    return None

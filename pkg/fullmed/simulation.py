"""
Simulation designs and the Monte Carlo harness.

Handles:
- Covariates with Toeplitz covariance 0.5^|i-j| and coefficients 0.5 / i^2
- The two data generating designs (the second adds treatment-mediator confounding)
- Parallel replications with order-independent aggregation
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.linalg import cholesky, toeplitz

from fullmed.config import MediatorKind, TestKind
from fullmed.data import Dataset
from fullmed.errors import ArgumentError, DataError, EstimationError
from fullmed.estimators.runner import EngineParams, run_test
from fullmed.utils.seeding import STREAM_REPLICATION, STREAM_SAMPLE, derive_seed, make_rng

logger = logging.getLogger(__name__)

RngLike = Union[int, np.random.Generator]


@dataclass(frozen=True)
class DgpConfig:
    """
    Parameters of one simulation design.

    Attributes:
        n: Sample size
        p: Number of covariates
        delta: Strength of the confounder shared by D, M and Y
        gamma: Direct effect of D on Y
        lam: Treatment-mediator confounding (design 2 only)
        seed: Seed of the draw
        dgp: Design number, 1 or 2
        mediator: Continuous mediator, or its indicator of a positive index
    """
    n: int = 1000
    p: int = 200
    delta: float = 0.0
    gamma: float = 0.0
    lam: float = 0.0
    seed: int = 1
    dgp: int = 1
    mediator: MediatorKind = MediatorKind.CONTINUOUS

    def __post_init__(self):
        if self.n < 10:
            raise ArgumentError(f"n must be >= 10 (got {self.n})")
        if self.p < 1:
            raise ArgumentError(f"p must be >= 1 (got {self.p})")
        if self.dgp not in (1, 2):
            raise ArgumentError(f"dgp must be 1 or 2 (got {self.dgp})")
        if self.dgp == 1 and self.lam != 0.0:
            raise ArgumentError("design 1 has no treatment-mediator confounding; use dgp=2 for lambda != 0")

    def with_seed(self, seed: int) -> "DgpConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dgp": self.dgp,
            "n": self.n,
            "p": self.p,
            "delta": self.delta,
            "gamma": self.gamma,
            "lambda": self.lam,
            "mediator": str(self.mediator),
            "seed": self.seed,
        }


def _rng(source: RngLike) -> np.random.Generator:
    if isinstance(source, np.random.Generator):
        return source
    return make_rng(int(source), STREAM_SAMPLE)


def covariate_covariance(p: int) -> np.ndarray:
    """Toeplitz matrix with entries 0.5^|i-j|."""
    return toeplitz(0.5 ** np.arange(p))


def gen_covariates(n: int, p: int, rng: RngLike) -> np.ndarray:
    """n draws of N(0, Sigma) with Sigma = 0.5^|i-j|, via the Cholesky factor."""
    if n < 1 or p < 1:
        raise ArgumentError(f"need n, p >= 1 (got n={n}, p={p})")
    factor = cholesky(covariate_covariance(p), lower=True)
    return _rng(rng).standard_normal((n, p)) @ factor.T


def beta_schedule(p: int) -> np.ndarray:
    """beta_i = 0.5 / i^2 for i = 1..p."""
    return 0.5 / np.arange(1, p + 1, dtype=float) ** 2


def simulate(config: DgpConfig, rng: Optional[RngLike] = None) -> Dataset:
    """
    Draw one sample.

    D = 1{X'b + lam U2 + U1 > 0}
    M = 0.5 D + X'b + delta U1 + U2   (or its indicator of being positive)
    Y = M + X'b + gamma D + delta U1 + U3
    """
    rng = _rng(config.seed if rng is None else rng)
    x = gen_covariates(config.n, config.p, rng)
    index = x @ beta_schedule(config.p)
    u1, u2, u3 = rng.standard_normal((3, config.n))

    d = (index + config.lam * u2 + u1 > 0).astype(np.int64)
    m = 0.5 * d + index + config.delta * u1 + u2
    if config.mediator == MediatorKind.BINARY:
        m = (m > 0).astype(float)
    y = m + index + config.gamma * d + config.delta * u1 + u3

    return Dataset(
        y=y, d=d, m=m[:, None], x=x,
        mediator_names=("m",),
        covariate_names=tuple(f"x{j + 1}" for j in range(config.p)),
    )


@dataclass
class ReplicationResult:
    """Outcome of one Monte Carlo replication."""
    index: int
    theta: float = math.nan
    se: float = math.nan
    p_value: float = math.nan
    n_effective: int = 0
    error: Optional[str] = None

    @property
    def success(self) -> bool:
        return self.error is None


@dataclass
class McReport:
    """Summary of a Monte Carlo experiment."""
    mean_theta: float
    sd_theta: float
    mean_se: float
    rejection_rate: float
    reps_completed: int
    reps_failed: int
    mean_n_effective: float
    alpha: float
    failures: List[Tuple[int, str]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean_theta": self.mean_theta,
            "sd_theta": self.sd_theta,
            "mean_se": self.mean_se,
            "rejection_rate": self.rejection_rate,
            "reps_completed": self.reps_completed,
            "reps_failed": self.reps_failed,
            "mean_n_effective": self.mean_n_effective,
            "alpha": self.alpha,
            "failures": [{"replication": i, "error": message} for i, message in self.failures],
        }

    @staticmethod
    def markdown_header() -> str:
        return (
            "| design | n | theta | std theta | mean SE | rej. rate | eff. n |\n"
            "|---|---|---|---|---|---|---|"
        )

    def markdown_row(self, config: DgpConfig) -> str:
        """Table row with the estimate, its spread, mean SE and rejection rate."""
        label = f"dgp{config.dgp} delta={config.delta:g} gamma={config.gamma:g}"
        if config.dgp == 2:
            label += f" lambda={config.lam:g}"
        return (
            f"| {label} | {config.n} | {self.mean_theta:.3f} | {self.sd_theta:.3f} | "
            f"{self.mean_se:.3f} | {self.rejection_rate:.3f} | {self.mean_n_effective:.0f} |"
        )


def summarize(results: List[ReplicationResult], alpha: float) -> McReport:
    """Reduce replication results (sorted by index first) into a report."""
    ordered = sorted(results, key=lambda r: r.index)
    done = [r for r in ordered if r.success]
    failures = [(r.index, r.error) for r in ordered if not r.success]
    if not done:
        return McReport(
            mean_theta=math.nan, sd_theta=math.nan, mean_se=math.nan, rejection_rate=math.nan,
            reps_completed=0, reps_failed=len(failures), mean_n_effective=math.nan,
            alpha=alpha, failures=failures,
        )

    thetas = np.array([r.theta for r in done])
    return McReport(
        mean_theta=float(np.mean(thetas)),
        sd_theta=float(np.std(thetas, ddof=1)) if thetas.size > 1 else 0.0,
        mean_se=float(np.mean([r.se for r in done])),
        rejection_rate=sum(r.p_value < alpha for r in done) / len(done),
        reps_completed=len(done),
        reps_failed=len(failures),
        mean_n_effective=float(np.mean([r.n_effective for r in done])),
        alpha=alpha,
        failures=failures,
    )


def run_monte_carlo(
    config: DgpConfig,
    reps: int,
    alpha: float = 0.05,
    params: Optional[EngineParams] = None,
    test: Optional[TestKind] = None,
    threads: int = 1,
    on_result: Optional[Callable[[ReplicationResult], None]] = None,
) -> McReport:
    """
    Simulate and test ``reps`` independent samples.

    Replication r uses the seed derived from (config.seed, r), so the report
    does not depend on the number of workers or on completion order.

    Args:
        config: Simulation design; its seed is the experiment seed
        reps: Number of replications
        alpha: Level at which rejections are counted
        params: Engine parameters (defaults: one split, 5 folds, lasso)
        test: Overrides ``params.test``
        threads: Worker processes
        on_result: Called with each finished replication (progress output)
    """
    if reps < 1:
        raise ArgumentError(f"reps must be >= 1 (got {reps})")
    if not 0.0 < alpha < 1.0:
        raise ArgumentError(f"alpha must lie in (0, 1) (got {alpha})")
    params = params or EngineParams()
    if test is not None:
        params = replace(params, test=TestKind(test))
    if params.test == TestKind.BDFD and config.mediator != MediatorKind.BINARY:
        raise ArgumentError("the BD-FD test needs a discrete mediator; use the binary mediator design")

    jobs = [(config, params, r) for r in range(reps)]
    results: List[ReplicationResult] = []

    def collect(result: ReplicationResult) -> None:
        results.append(result)
        if not result.success:
            logger.warning("Replication %d excluded: %s", result.index, result.error)
        if on_result is not None:
            on_result(result)

    if threads > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            futures = {executor.submit(_run_replication, job): job[2] for job in jobs}
            for future in as_completed(futures):
                collect(future.result())
    else:
        for job in jobs:
            collect(_run_replication(job))

    return summarize(results, alpha)


# Module-level function for multiprocessing (must be picklable)
def _run_replication(args: tuple) -> ReplicationResult:
    """
    Simulate one sample and apply the test.

    Estimation and data failures are returned as errors so the harness can
    exclude and count them.
    """
    config, params, index = args
    seed = derive_seed(config.seed, STREAM_REPLICATION, index)
    try:
        data = simulate(config.with_seed(seed))
        result = run_test(data, params, seed, threads=1)
    except (EstimationError, DataError) as e:
        return ReplicationResult(index=index, error=str(e))
    return ReplicationResult(
        index=index,
        theta=result.theta_hat,
        se=result.se,
        p_value=result.p_value,
        n_effective=result.n_effective,
    )

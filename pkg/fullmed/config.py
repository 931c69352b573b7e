"""
Configuration and constants for the mediation testing toolkit.

This module centralizes all configuration, making it easy to:
- Override run defaults via environment variables (or a .env file)
- Keep experiment manifests as flat ``key = value`` config files
- Carry the full run configuration into every JSON report
"""

import os
from dataclasses import asdict, dataclass, fields
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        """Backport of :class:`enum.StrEnum` for Python < 3.11."""

        __str__ = str.__str__
        __format__ = str.__format__

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

from fullmed.errors import ConfigError

# Load .env file if available
try:
    from dotenv import dotenv_values, load_dotenv
    load_dotenv()
    DOTENV_AVAILABLE = True
except ImportError:
    dotenv_values = None
    DOTENV_AVAILABLE = False


class Command(StrEnum):
    """CLI subcommands."""
    TEST_CI = "test-ci"
    TEST_BDFD = "test-bdfd"
    SIMULATE = "simulate"
    ORACLE = "oracle"
    VERIFY_DAGS = "verify-dags"


class OracleAction(StrEnum):
    """Subcommands of ``oracle``."""
    CHECK_TI = "check-ti"
    CHECK_BDFD = "check-bdfd"
    EFFECTS = "effects"
    FIND_COUNTEREXAMPLE = "find-counterexample"


class TestKind(StrEnum):
    """Which test a Monte Carlo run applies to each replication."""
    __test__ = False
    CI = "ci"
    BDFD = "bdfd"


class Alternative(StrEnum):
    """Sidedness of the reported p-value."""
    TWO_SIDED = "two-sided"
    GREATER = "greater"


class PartitionMethod(StrEnum):
    """How treatment levels are grouped into cells."""
    DISCRETE = "discrete"
    QUANTILE = "quantile"


class ScoreKind(StrEnum):
    """Score used by the conditional mean independence test."""
    AUTO = "auto"
    BINARY = "binary"
    MULTIVALUED = "multivalued"


class ZetaMode(StrEnum):
    """
    Front-door contrast used by the BD-FD test.

    observed:   mediator means evaluated at the observed treatment
    integrated: mediator means averaged over f(d'|X) before mixing
    """
    OBSERVED = "observed"
    INTEGRATED = "integrated"


class Aggregation(StrEnum):
    """How a TestResult was produced."""
    SINGLE = "single"
    MEDIAN = "median-of-splits"


class MediatorKind(StrEnum):
    """Mediator scale in the simulation designs."""
    CONTINUOUS = "continuous"
    BINARY = "binary"


class LearnerFamily(StrEnum):
    """Loss family of a sparse learner."""
    SQUARED_LOSS = "squared-loss"
    LOGISTIC = "logistic"


class LearnerBackend(StrEnum):
    """Registered learner implementations."""
    LASSO = "lasso"
    SKLEARN_LASSO = "sklearn-lasso"


# Model class of every nuisance fit: l1-penalized squared loss for outcome
# means, l1-penalized logistic loss for propensities
MODEL_FAMILY = "lasso"


class Direction(StrEnum):
    """Direction of a graph-level implication."""
    IMPLIES = "=>"
    IMPLIED_BY = "<="
    IFF = "<=>"


class Defaults:
    """Built-in defaults; seed, threads and log level honour the environment."""
    SEED = int(os.getenv("FULLMED_SEED", "1"))
    THREADS = int(os.getenv("FULLMED_THREADS", "0"))
    LOG_LEVEL = os.getenv("FULLMED_LOG_LEVEL", "WARNING")

    FOLDS = 5
    CSV_SPLITS = 10
    SIM_SPLITS = 1
    ALPHA = 0.05
    TRIM_LOWER = 0.05
    TRIM_UPPER = 0.95

    CV_FOLDS = 10
    TOL = 1e-7
    MAX_ITER = 1000
    N_LAMBDA = 100
    LAMBDA_MIN_RATIO = 1e-3

    MIN_CELL_PROB = 0.01
    SEARCH_BUDGET = 100_000


def parse_bool(value: str) -> bool:
    """Parse a config-file boolean."""
    lowered = str(value).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"Invalid boolean value '{value}'")


# Config-file key -> (RunConfig attribute, converter)
CONFIG_KEYS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "seed": ("seed", int),
    "threads": ("threads", int),
    "folds": ("folds", int),
    "splits": ("splits", int),
    "alpha": ("alpha", float),
    "alternative": ("alternative", Alternative),
    "trim.lower": ("trim_lower", float),
    "trim.upper": ("trim_upper", float),
    "trim.enabled": ("trim_enabled", parse_bool),
    "learner.backend": ("learner_backend", LearnerBackend),
    "learner.family": ("model_family", str),
    "learner.cv_folds": ("cv_folds", int),
    "learner.lambda": ("penalty", float),
    "learner.standardize": ("standardize", parse_bool),
    "learner.tol": ("tol", float),
    "learner.max_iter": ("max_iter", int),
    "partition.method": ("partition_method", PartitionMethod),
    "partition.cells": ("cells", int),
    "partition.min_prob": ("min_prob", float),
    "out": ("out", str),
}


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a flat ``key = value`` config file.

    Args:
        path: Path to the config file

    Returns:
        Mapping of RunConfig attribute names to converted values

    Raises:
        ConfigError: If the file is missing, python-dotenv is not installed,
            a key is unknown, or a value cannot be converted
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    if not DOTENV_AVAILABLE:
        raise ConfigError("Reading config files requires python-dotenv")

    overrides: Dict[str, Any] = {}
    for key, raw in dotenv_values(path).items():
        if key not in CONFIG_KEYS:
            known = ", ".join(sorted(CONFIG_KEYS))
            raise ConfigError(f"Unknown config key '{key}' in {path} (known keys: {known})")
        if raw is None:
            raise ConfigError(f"Config key '{key}' in {path} has no value")
        attr, convert = CONFIG_KEYS[key]
        try:
            overrides[attr] = convert(raw.strip())
        except (ValueError, ConfigError) as e:
            raise ConfigError(f"Invalid value for '{key}' in {path}: {raw!r} ({e})") from e
    return overrides


@dataclass
class RunConfig:
    """
    Main configuration container.

    Encapsulates every setting of a CLI run. Reports embed ``to_dict()``
    so each JSON document records how it was produced.
    """
    command: Command = Command.TEST_CI

    # Data and schema
    data_path: Optional[str] = None
    outcome: Optional[str] = None
    treatment: Optional[str] = None
    mediators: Tuple[str, ...] = ()
    covariates: Union[Tuple[str, ...], str] = ()

    # Engine
    seed: int = Defaults.SEED
    threads: int = Defaults.THREADS
    folds: int = Defaults.FOLDS
    splits: Optional[int] = None
    alpha: float = Defaults.ALPHA
    alternative: Alternative = Alternative.TWO_SIDED
    trim_lower: float = Defaults.TRIM_LOWER
    trim_upper: float = Defaults.TRIM_UPPER
    trim_enabled: bool = True
    score: ScoreKind = ScoreKind.AUTO
    zeta: ZetaMode = ZetaMode.OBSERVED

    # Learner
    learner_backend: LearnerBackend = LearnerBackend.LASSO
    model_family: str = MODEL_FAMILY
    cv_folds: int = Defaults.CV_FOLDS
    penalty: Optional[float] = None
    standardize: bool = True
    tol: float = Defaults.TOL
    max_iter: int = Defaults.MAX_ITER

    # Treatment partition
    partition_method: PartitionMethod = PartitionMethod.DISCRETE
    cells: Optional[int] = None
    min_prob: float = Defaults.MIN_CELL_PROB

    # Simulation
    dgp: int = 1
    n: int = 1000
    p: int = 200
    delta: float = 0.0
    gamma: float = 0.0
    lam: float = 0.0
    reps: int = 100
    test: TestKind = TestKind.CI
    mediator: MediatorKind = MediatorKind.CONTINUOUS

    # Oracle
    oracle_action: Optional[OracleAction] = None
    population_path: Optional[str] = None
    budget: int = Defaults.SEARCH_BUDGET
    separable: bool = False
    strict: bool = False

    # DAG verification
    theorem: str = "all"
    list_counterexamples: bool = False

    # Output
    out: Optional[str] = None

    @property
    def effective_threads(self) -> int:
        """Worker count, resolving 0 to the machine's parallelism."""
        if self.threads <= 0:
            return max(1, os.cpu_count() or 1)
        return self.threads

    @property
    def effective_splits(self) -> int:
        """Sample splits: 10 for user data, 1 for simulations unless set."""
        if self.splits is not None:
            return self.splits
        if self.command == Command.SIMULATE:
            return Defaults.SIM_SPLITS
        return Defaults.CSV_SPLITS

    def apply_overrides(self, overrides: Dict[str, Any]) -> None:
        """Set attributes from a mapping, ignoring None values."""
        names = {f.name for f in fields(self)}
        for key, value in overrides.items():
            if key not in names:
                raise ConfigError(f"Unknown configuration field '{key}'")
            if value is not None:
                setattr(self, key, value)

    def validate(self) -> None:
        """
        Check every parameter against its documented domain.

        Raises:
            ConfigError: On the first out-of-domain value
        """
        checks = [
            (self.folds >= 2, f"folds must be >= 2 (got {self.folds})"),
            (self.splits is None or self.splits >= 1, f"splits must be >= 1 (got {self.splits})"),
            (0.0 < self.alpha < 1.0, f"alpha must lie in (0, 1) (got {self.alpha})"),
            (0.0 < self.trim_lower < 0.5, f"trim.lower must lie in (0, 0.5) (got {self.trim_lower})"),
            (0.5 < self.trim_upper < 1.0, f"trim.upper must lie in (0.5, 1) (got {self.trim_upper})"),
            (self.cv_folds >= 2, f"learner.cv_folds must be >= 2 (got {self.cv_folds})"),
            (self.penalty is None or self.penalty > 0, f"learner.lambda must be > 0 (got {self.penalty})"),
            (self.tol > 0, f"learner.tol must be > 0 (got {self.tol})"),
            (self.max_iter >= 1, f"learner.max_iter must be >= 1 (got {self.max_iter})"),
            (self.model_family == MODEL_FAMILY, f"learner.family must be {MODEL_FAMILY} (got {self.model_family})"),
            (self.cells is None or self.cells >= 2, f"partition.cells must be >= 2 (got {self.cells})"),
            (0.0 <= self.min_prob < 1.0, f"partition.min_prob must lie in [0, 1) (got {self.min_prob})"),
            (self.dgp in (1, 2), f"dgp must be 1 or 2 (got {self.dgp})"),
            (self.n >= 10, f"n must be >= 10 (got {self.n})"),
            (self.p >= 1, f"p must be >= 1 (got {self.p})"),
            (self.reps >= 1, f"reps must be >= 1 (got {self.reps})"),
            (self.budget >= 1, f"budget must be >= 1 (got {self.budget})"),
            (self.theorem in ("1", "2", "all", "sanity"), f"theorem must be 1, 2, all or sanity (got {self.theorem})"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def to_dict(self) -> Dict[str, Any]:
        """Plain-data view for JSON provenance."""
        data = asdict(self)
        # Reports are identical for any worker count
        data.pop("threads")
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        data["effective_splits"] = self.effective_splits
        return data

"""
Exception hierarchy for the mediation testing toolkit.

Every exception carries an ``exit_code`` that the CLI returns when the
exception escapes a command:

- 1: usage, configuration or internal errors
- 2: data and validation errors
- 3: estimation infeasible (degenerate folds, empty trim set, no usable partition)
"""

from typing import Optional


class FullmedError(Exception):
    """Base exception for all toolkit errors."""
    exit_code = 1


class ConfigError(FullmedError):
    """Raised for invalid run configuration or config-file content."""
    pass


class ArgumentError(FullmedError, ValueError):
    """Raised when a function receives arguments outside its domain."""
    pass


class DataError(FullmedError):
    """Base class for errors in user-supplied data."""
    exit_code = 2


class SchemaError(DataError):
    """A column named in the schema does not exist in the file."""
    pass


class DataParseError(DataError):
    """A cell could not be parsed as a number."""
    pass


class ValidationError(DataError):
    """Data failed a structural check (missing values, lengths, constant treatment)."""
    pass


class PopulationError(DataError):
    """A discrete population definition is malformed."""
    pass


class EstimationError(FullmedError):
    """Base class for errors that make a test infeasible on the given data."""
    exit_code = 3


class PartitionError(EstimationError):
    """No treatment partition with at least two usable cells exists."""
    pass


class FoldDegeneracyError(EstimationError):
    """A cross-fitting training subset is too small or has a constant target."""

    def __init__(self, fold: int, cell, reason: str):
        self.fold = fold
        self.cell = cell
        self.reason = reason
        super().__init__(f"degenerate training subset for fold {fold}, cell {cell}: {reason}")


class TestInfeasibleError(EstimationError):
    """Fewer than two observations survive trimming."""
    __test__ = False


class LearnerError(FullmedError):
    """Base exception for learner failures."""
    pass


class LearnerNotAvailableError(LearnerError):
    """Raised when a learner backend's dependencies are not installed."""
    pass


class AmbiguousCheckError(FullmedError):
    """
    An exact check landed between the 'holds' and 'fails' thresholds.

    Attributes:
        deviation: The maximum absolute deviation that was measured
    """

    def __init__(self, check: str, deviation: float, message: Optional[str] = None):
        self.check = check
        self.deviation = deviation
        super().__init__(
            message or f"{check}: deviation {deviation:.3e} is neither exact nor a clear violation"
        )


class InternalScoreError(FullmedError, RuntimeError):
    """A propensity of exactly 0 or 1 reached a score function."""
    pass

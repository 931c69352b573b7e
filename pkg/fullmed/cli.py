"""
Command Line Interface module.

Provides the argument parser and CLI entry point for the mediation tests.
Separates CLI concerns from the core estimation logic.

Values are merged in three layers: built-in defaults (optionally from the
environment or a .env file), then a ``--config`` file, then argv.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from fullmed.config import (
    Alternative,
    Command,
    Defaults,
    LearnerBackend,
    MediatorKind,
    OracleAction,
    PartitionMethod,
    RunConfig,
    ScoreKind,
    TestKind,
    ZetaMode,
    load_config_file,
)
from fullmed.data import ALL_REMAINING
from fullmed.errors import FullmedError
from fullmed.pipeline import Pipeline

logger = logging.getLogger(__name__)


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def column_list(value: str) -> tuple:
    """Parse a comma-separated column list."""
    return tuple(part.strip() for part in value.split(",") if part.strip())


def covariate_list(value: str):
    """Comma-separated columns, or ``all-remaining``."""
    return ALL_REMAINING if value.strip() == ALL_REMAINING else column_list(value)


def _common_options() -> argparse.ArgumentParser:
    parent = CliParser(add_help=False)
    parent.add_argument(
        "--config",
        dest="config_file",
        default=argparse.SUPPRESS,
        help="Flat 'key = value' config file; argv overrides its values"
    )
    parent.add_argument(
        "--seed",
        type=int,
        default=argparse.SUPPRESS,
        help=f"Run seed; every random stream derives from it (default: {Defaults.SEED})"
    )
    parent.add_argument(
        "--threads",
        type=int,
        default=argparse.SUPPRESS,
        help="Parallel workers; 0 = machine parallelism (default: 0). Results do not depend on it"
    )
    parent.add_argument(
        "-o", "--out",
        default=argparse.SUPPRESS,
        help="Write the JSON report to this path"
    )
    parent.add_argument(
        "-v", "--verbose",
        action="count",
        default=0,
        help="-v for progress logging, -vv for debug logging"
    )
    return parent


def _engine_options() -> argparse.ArgumentParser:
    parent = CliParser(add_help=False)
    group = parent.add_argument_group("estimation")
    group.add_argument("--folds", type=int, default=argparse.SUPPRESS,
                       help=f"Cross-fitting folds K (default: {Defaults.FOLDS})")
    group.add_argument("--splits", type=int, default=argparse.SUPPRESS,
                       help=f"Independent sample splits S (default: {Defaults.CSV_SPLITS} "
                            f"for data, {Defaults.SIM_SPLITS} for simulations)")
    group.add_argument("--alpha", type=float, default=argparse.SUPPRESS,
                       help=f"Significance level (default: {Defaults.ALPHA})")
    group.add_argument("--alternative", choices=[a.value for a in Alternative], default=argparse.SUPPRESS,
                       help="two-sided (default) or greater")
    group.add_argument("--trim-lower", dest="trim_lower", type=float, default=argparse.SUPPRESS,
                       help=f"Lower propensity bound (default: {Defaults.TRIM_LOWER})")
    group.add_argument("--trim-upper", dest="trim_upper", type=float, default=argparse.SUPPRESS,
                       help=f"Upper propensity bound (default: {Defaults.TRIM_UPPER})")
    group.add_argument("--no-trim", dest="trim_enabled", action="store_false", default=argparse.SUPPRESS,
                       help="Keep every observation regardless of estimated propensities")
    group.add_argument("--score", choices=[s.value for s in ScoreKind], default=argparse.SUPPRESS,
                       help="Score of the CI test (default: auto)")
    group.add_argument("--zeta", choices=[z.value for z in ZetaMode], default=argparse.SUPPRESS,
                       help="Front-door contrast of the BD-FD test (default: observed). observed has a "
                            "population target of zero in every world and little power; integrated "
                            "targets the front-door functional")
    group.add_argument("--partition", dest="partition_method", choices=[p.value for p in PartitionMethod],
                       default=argparse.SUPPRESS, help="Treatment partition method (default: discrete)")
    group.add_argument("--cells", type=int, default=argparse.SUPPRESS,
                       help="Cells of a quantile partition")
    group.add_argument("--min-prob", dest="min_prob", type=float, default=argparse.SUPPRESS,
                       help=f"Minimum level probability of a discrete partition (default: {Defaults.MIN_CELL_PROB})")

    learner = parent.add_argument_group("learner")
    learner.add_argument("--learner", dest="learner_backend", choices=[b.value for b in LearnerBackend],
                         default=argparse.SUPPRESS, help="Nuisance learner (default: lasso)")
    learner.add_argument("--cv-folds", dest="cv_folds", type=int, default=argparse.SUPPRESS,
                         help=f"Folds for penalty selection (default: {Defaults.CV_FOLDS})")
    learner.add_argument("--penalty", type=float, default=argparse.SUPPRESS,
                         help="Fixed penalty instead of a cross-validated grid")
    learner.add_argument("--no-standardize", dest="standardize", action="store_false",
                         default=argparse.SUPPRESS, help="Fit on the raw feature scale")
    learner.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                         help=f"Coordinate-descent tolerance (default: {Defaults.TOL:g})")
    learner.add_argument("--max-iter", dest="max_iter", type=int, default=argparse.SUPPRESS,
                         help=f"Maximum sweeps (default: {Defaults.MAX_ITER})")
    return parent


def _data_options() -> argparse.ArgumentParser:
    parent = CliParser(add_help=False)
    group = parent.add_argument_group("data")
    group.add_argument("--data", dest="data_path", required=True, help="CSV file with a header row")
    group.add_argument("--outcome", required=True, help="Outcome column")
    group.add_argument("--treatment", required=True, help="Treatment column")
    group.add_argument("--mediators", type=column_list, default=argparse.SUPPRESS,
                       help="Comma-separated mediator columns")
    group.add_argument("--covariates", type=covariate_list, default=argparse.SUPPRESS,
                       help="Comma-separated covariate columns, or 'all-remaining'")
    return parent


BDFD_DESCRIPTION = """\
Compare E[Y | D, X] with its front-door representation (discrete D and M).

With --zeta observed (the default) the front-door term is evaluated at the
observed treatment, so back-door and front-door means coincide at the
population level in every world: the test has almost no power against
direct effects. Use --zeta integrated to compare against the front-door
functional with the treatment integrated out.
"""


def create_parser() -> argparse.ArgumentParser:
    """Create and configure the argument parser."""
    common, engine, data = _common_options(), _engine_options(), _data_options()

    parser = CliParser(
        prog="fullmed",
        description="Test full mediation and mediator exogeneity with double machine learning.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Commands:
  test-ci      Conditional mean independence of Y and D given (M, X)
  test-bdfd    Back-door versus front-door conditional means (discrete D and M)
  simulate     Monte Carlo rejection rates of the simulation designs
  oracle       Exact checks on a discrete population file
  verify-dags  Exhaustive graph-level check of the identification theorems

Examples:
  # Test on your own data (10 sample splits by default)
  %(prog)s test-ci --data input/study.csv --outcome y --treatment d --mediators m \\
      --covariates all-remaining

  # Same, one-sided, with a JSON report
  %(prog)s test-ci --data input/study.csv --outcome y --treatment d --mediators m \\
      --covariates x1,x2,x3 --alternative greater --out output/study.json

  # Front-door comparison with a discrete mediator
  %(prog)s test-bdfd --data input/study.csv --outcome y --treatment d --mediators m \\
      --covariates all-remaining

  # Size of the test under the joint null
  %(prog)s simulate --dgp 1 --n 1000 --p 50 --delta 0 --gamma 0 --reps 200 --seed 1

  # Treatment-mediator confounding only (the test should not react)
  %(prog)s simulate --dgp 2 --lambda 0.25 --n 1000 --p 50 --reps 200

  # Exact checks on a population file
  %(prog)s oracle check-ti --population input/population.json
  %(prog)s oracle effects --population input/population.json

  # Search for a population where BD=FD holds but the implication fails
  %(prog)s oracle find-counterexample --budget 10000 --out output/witness.json

  # Re-verify the graph theorems and list counterexamples of the negative control
  %(prog)s verify-dags --theorem all
  %(prog)s verify-dags --theorem sanity --list-counterexamples

Exit codes:
  0  success
  1  usage or configuration error
  2  data or validation error
  3  estimation infeasible (degenerate folds, empty trim set)

Environment:
  FULLMED_SEED, FULLMED_THREADS, FULLMED_LOG_LEVEL (also read from .env)
        """
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    commands.add_parser(
        Command.TEST_CI.value, parents=[common, engine, data],
        help="Conditional mean independence test on CSV data",
    )
    commands.add_parser(
        Command.TEST_BDFD.value, parents=[common, engine, data],
        help="BD-FD comparison test on CSV data",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=BDFD_DESCRIPTION,
    )

    simulate = commands.add_parser(
        Command.SIMULATE.value, parents=[common, engine],
        help="Monte Carlo experiment",
    )
    simulate.add_argument("--dgp", type=int, choices=[1, 2], default=argparse.SUPPRESS,
                          help="Design 1, or 2 with treatment-mediator confounding (default: 1)")
    simulate.add_argument("--n", type=int, default=argparse.SUPPRESS, help="Sample size (default: 1000)")
    simulate.add_argument("--p", type=int, default=argparse.SUPPRESS, help="Covariates (default: 200)")
    simulate.add_argument("--delta", type=float, default=argparse.SUPPRESS,
                          help="Confounding of D, M and Y (default: 0)")
    simulate.add_argument("--gamma", type=float, default=argparse.SUPPRESS,
                          help="Direct effect of D on Y (default: 0)")
    simulate.add_argument("--lambda", dest="lam", type=float, default=argparse.SUPPRESS,
                          help="Treatment-mediator confounding, design 2 only (default: 0)")
    simulate.add_argument("--reps", type=int, default=argparse.SUPPRESS,
                          help="Replications (default: 100)")
    simulate.add_argument("--test", choices=[t.value for t in TestKind], default=argparse.SUPPRESS,
                          help="Test applied to each replication (default: ci)")
    simulate.add_argument("--mediator", choices=[k.value for k in MediatorKind], default=argparse.SUPPRESS,
                          help="Continuous mediator or its positive-index indicator (default: continuous)")

    oracle = commands.add_parser(
        Command.ORACLE.value, parents=[common],
        help="Exact population computations",
    )
    oracle.add_argument("oracle_action", choices=[a.value for a in OracleAction],
                        help="check-ti, check-bdfd, effects or find-counterexample")
    oracle.add_argument("--population", dest="population_path", default=argparse.SUPPRESS,
                        help="Population JSON file")
    oracle.add_argument("--budget", type=int, default=argparse.SUPPRESS,
                        help=f"Search trials (default: {Defaults.SEARCH_BUDGET})")
    oracle.add_argument("--separable", action="store_true", default=argparse.SUPPRESS,
                        help="Restrict the search to separable outcome kernels")
    oracle.add_argument("--strict", action="store_true", default=argparse.SUPPRESS,
                        help="Fail when a deviation falls between the holds and fails thresholds")

    verify = commands.add_parser(
        Command.VERIFY_DAGS.value, parents=[common],
        help="Exhaustive DAG verification",
    )
    verify.add_argument("--theorem", choices=["1", "2", "all", "sanity"], default=argparse.SUPPRESS,
                        help="Which statement to verify (default: all)")
    verify.add_argument("--list-counterexamples", dest="list_counterexamples", action="store_true",
                        default=argparse.SUPPRESS, help="Print every counterexample graph")
    return parser


# argparse value -> RunConfig field type
ENUM_FIELDS = {
    "command": Command,
    "alternative": Alternative,
    "score": ScoreKind,
    "zeta": ZetaMode,
    "partition_method": PartitionMethod,
    "learner_backend": LearnerBackend,
    "test": TestKind,
    "mediator": MediatorKind,
    "oracle_action": OracleAction,
}


def args_to_config(args: argparse.Namespace) -> RunConfig:
    """
    Convert parsed arguments to a RunConfig.

    Raises:
        ConfigError: If the config file is invalid or a value is out of domain
    """
    values: Dict[str, Any] = vars(args).copy()
    values.pop("verbose", None)
    config_file = values.pop("config_file", None)

    config = RunConfig()
    if config_file:
        config.apply_overrides(load_config_file(config_file))
    for key, convert in ENUM_FIELDS.items():
        if key in values:
            values[key] = convert(values[key])
    config.apply_overrides(values)
    config.validate()
    return config


def configure_logging(verbosity: int) -> None:
    """Route library logs to stderr at the requested level."""
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, str(Defaults.LOG_LEVEL).upper(), logging.WARNING)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv, run the command and return the exit code.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        0 on success, otherwise the exit code of the error
    """
    parser = create_parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1

    configure_logging(args.verbose)
    try:
        config = args_to_config(args)
        Pipeline(config).run()
    except FullmedError as e:
        print(f"\n❌ Error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Unexpected error")
        print(f"\n❌ Error: {e}", file=sys.stderr)
        return 1

    print("\n✅ Done!")
    return 0


def main(argv: Optional[List[str]] = None) -> None:
    """Main CLI entry point."""
    sys.exit(run(argv))


if __name__ == "__main__":
    main()

"""
Pipeline orchestrator module.

Coordinates every subcommand, handling:
- Data loading and schema resolution
- Repeated sample splits and Monte Carlo replications
- Oracle checks on population files and graph verification
- Progress reporting and JSON report assembly
"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, Optional

from fullmed.config import Command, OracleAction, RunConfig, TestKind
from fullmed.data import ColumnSchema, Dataset, load_csv
from fullmed.errors import ConfigError
from fullmed.estimators.runner import EngineParams, run_test
from fullmed.graphs.verifier import check_theorem
from fullmed.oracle.checks import check_bdfd, check_ti, effects, find_bdfd_not_ti
from fullmed.oracle.population import load_population, marginalize, save_population
from fullmed.reports import ReportWriter
from fullmed.simulation import DgpConfig, ReplicationResult, run_monte_carlo

logger = logging.getLogger(__name__)


def _format_elapsed(elapsed: float) -> str:
    if elapsed >= 60:
        minutes = int(elapsed // 60)
        return f"{minutes}m {elapsed % 60:.1f}s"
    return f"{elapsed:.1f}s"


class Pipeline:
    """
    Run orchestrator.

    Dispatches a validated ``RunConfig`` to the matching workflow, prints
    progress to stdout and writes the JSON document when ``out`` is set.
    """

    def __init__(self, config: RunConfig):
        """
        Initialize the pipeline with configuration.

        Args:
            config: Run configuration
        """
        self.config = config
        self.writer = ReportWriter()
        self._data: Optional[Dataset] = None

    @property
    def data(self) -> Dataset:
        """Lazily load the CSV named in the configuration."""
        if self._data is None:
            schema = ColumnSchema(
                outcome=self.config.outcome,
                treatment=self.config.treatment,
                mediators=tuple(self.config.mediators),
                covariates=self.config.covariates,
            )
            self._data = load_csv(self.config.data_path, schema)
        return self._data

    def validate(self) -> None:
        """
        Validate that the pipeline can run with the current config.

        Raises:
            ConfigError: If a value is out of domain or a required option is missing
        """
        self.config.validate()
        command = self.config.command
        if command in (Command.TEST_CI, Command.TEST_BDFD):
            missing = [flag for flag, value in (
                ("--data", self.config.data_path),
                ("--outcome", self.config.outcome),
                ("--treatment", self.config.treatment),
            ) if not value]
            if missing:
                raise ConfigError(f"{command} requires {', '.join(missing)}")
        if command == Command.ORACLE:
            if self.config.oracle_action is None:
                raise ConfigError("oracle requires an action")
            if self.config.oracle_action != OracleAction.FIND_COUNTEREXAMPLE and not self.config.population_path:
                raise ConfigError(f"oracle {self.config.oracle_action} requires --population")

    def run(self) -> Dict[str, Any]:
        """
        Execute the configured command.

        Returns:
            The JSON-ready report document
        """
        self.validate()
        self._print_header()
        self._print_config()

        start_time = time.time()
        handlers = {
            Command.TEST_CI: self._run_csv_test,
            Command.TEST_BDFD: self._run_csv_test,
            Command.SIMULATE: self._run_simulation,
            Command.ORACLE: self._run_oracle,
            Command.VERIFY_DAGS: self._run_verify,
        }
        result = handlers[self.config.command]()
        elapsed_time = time.time() - start_time

        document = self.writer.build_document(str(self.config.command), self.config.to_dict(), result)
        output_path = None
        if self.config.out and not self._out_is_population():
            output_path = self.writer.save_document(Path(self.config.out), self.writer.to_json(document))

        self._print_statistics(elapsed_time, output_path)
        return document

    def _out_is_population(self) -> bool:
        return (
            self.config.command == Command.ORACLE
            and self.config.oracle_action == OracleAction.FIND_COUNTEREXAMPLE
        )

    def _run_csv_test(self) -> Dict[str, Any]:
        """Test on user data over the configured number of sample splits."""
        test = TestKind.CI if self.config.command == Command.TEST_CI else TestKind.BDFD
        params = EngineParams.from_config(self.config, test)
        data = self.data
        print(f"📄 Loaded {data.n} rows: outcome={data.outcome_name}, treatment={data.treatment_name}, "
              f"{len(data.mediator_names)} mediator(s), {len(data.covariate_names)} covariate(s)")
        print(f"\n🔄 Running {test} test on {params.splits} sample split(s)...")

        result = run_test(data, params, self.config.seed, threads=self.config.effective_threads)
        print(self.writer.format_test(result, self.config.alpha))
        payload = result.to_dict()
        payload["data"] = data.describe()
        payload["engine"] = params.to_dict()
        return payload

    def _run_simulation(self) -> Dict[str, Any]:
        """Monte Carlo replications of a simulation design."""
        dgp = DgpConfig(
            n=self.config.n,
            p=self.config.p,
            delta=self.config.delta,
            gamma=self.config.gamma,
            lam=self.config.lam,
            seed=self.config.seed,
            dgp=self.config.dgp,
            mediator=self.config.mediator,
        )
        params = EngineParams.from_config(self.config)
        workers = self.config.effective_threads
        reps = self.config.reps
        print(f"\n🚀 Running {reps} replications with {workers} worker(s)...")

        finished = []

        def progress(result: ReplicationResult) -> None:
            finished.append(result.index)
            status = "✓" if result.success else f"❌ ({result.error})"
            if not result.success or len(finished) % max(1, reps // 10) == 0 or len(finished) == reps:
                print(f"   🎲 {len(finished)}/{reps} done (replication {result.index} {status})")

        report = run_monte_carlo(
            dgp, reps, alpha=self.config.alpha, params=params, threads=workers, on_result=progress,
        )
        print()
        print(self.writer.format_mc(report, dgp))
        payload = report.to_dict()
        payload["design"] = dgp.to_dict()
        payload["engine"] = params.to_dict()
        payload["markdown"] = report.markdown_row(dgp)
        return payload

    def _run_oracle(self) -> Dict[str, Any]:
        """Exact checks and effects on a population file, or a counterexample search."""
        action = OracleAction(self.config.oracle_action)
        if action == OracleAction.FIND_COUNTEREXAMPLE:
            return self._find_counterexample()

        pop = load_population(self.config.population_path)
        print(f"📄 Population: {self.config.population_path} "
              f"(|X|={pop.n_x}, |U|={pop.n_u}, |D|={pop.n_d}, |M|={pop.n_m}, |Y|={pop.n_y})")
        if action == OracleAction.EFFECTS:
            report = effects(pop)
            print(self.writer.format_effects(report))
            return report.to_dict()

        joint = marginalize(pop)
        check = check_ti if action == OracleAction.CHECK_TI else check_bdfd
        result = check(joint, strict=self.config.strict)
        print(self.writer.format_check(result))
        return result.to_dict()

    def _find_counterexample(self) -> Dict[str, Any]:
        budget = self.config.budget
        kind = "separable" if self.config.separable else "unrestricted"
        print(f"\n🔎 Searching {budget} {kind} populations...")
        witness = find_bdfd_not_ti(budget, self.config.seed, separable=self.config.separable)
        if witness is None:
            print("   ⚠️  No witness within budget (inconclusive)")
            return {"found": False, "budget": budget, "separable": self.config.separable}

        joint = marginalize(witness)
        ti, bdfd = check_ti(joint), check_bdfd(joint)
        print("   ✓ Witness found")
        print(self.writer.format_check(bdfd))
        print(self.writer.format_check(ti))
        if self.config.out:
            path = save_population(witness, self.config.out)
            print(f"   📁 Population written to {path}")
        return {
            "found": True,
            "budget": budget,
            "separable": self.config.separable,
            "checks": [bdfd.to_dict(), ti.to_dict()],
            "population": witness.to_dict(),
        }

    def _run_verify(self) -> Dict[str, Any]:
        """Exhaustive scan of the graph space for the selected theorems."""
        names = ["1", "2"] if self.config.theorem == "all" else [self.config.theorem]
        verdicts = []
        for name in names:
            print(f"\n🔍 Checking theorem {name}...")
            verdict = check_theorem(name)
            print(self.writer.format_verdict(verdict, self.config.list_counterexamples))
            verdicts.append(verdict.to_dict(self.config.list_counterexamples))
        return {"theorems": verdicts}

    def _print_header(self) -> None:
        """Print the startup header."""
        print("=" * 50)
        print(f"🧪 FULLMED {str(self.config.command).upper()}")
        print("=" * 50)

    def _print_config(self) -> None:
        """Print configuration details."""
        config = self.config
        if config.command in (Command.TEST_CI, Command.TEST_BDFD, Command.SIMULATE):
            trim = f"[{config.trim_lower}, {config.trim_upper}]" if config.trim_enabled else "off"
            print(f"⚙️  Config: K={config.folds}, S={config.effective_splits}, alpha={config.alpha}, "
                  f"trim={trim}, seed={config.seed}")
            print(f"🔧 Learner: {config.learner_backend} (cv_folds={config.cv_folds}, tol={config.tol:g})")
        if config.command == Command.SIMULATE:
            print(f"🎯 Design: dgp={config.dgp}, n={config.n}, p={config.p}, delta={config.delta}, "
                  f"gamma={config.gamma}, lambda={config.lam}, mediator={config.mediator}, test={config.test}")
        print("-" * 50)

    def _print_statistics(self, elapsed_time: float, output_path: Optional[Path]) -> None:
        """Print final statistics including timing."""
        print("\n" + "=" * 50)
        print("📊 STATISTICS")
        print("=" * 50)
        print(f"   Total time: {_format_elapsed(elapsed_time)}")
        if output_path is not None:
            print(f"   Output file: {output_path}")
            print(f"   Size: {output_path.stat().st_size / 1024:.1f} KB")
        print("=" * 50)

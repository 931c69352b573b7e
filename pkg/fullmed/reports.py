"""
Report formatting module.

Provides utilities for turning results into console text, Markdown
table rows and JSON documents.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from fullmed import __version__
from fullmed.estimators.ci_test import TestResult
from fullmed.graphs.verifier import Verdict
from fullmed.oracle.checks import CheckResult, EffectReport
from fullmed.simulation import DgpConfig, McReport


def _plain(value: Any) -> Any:
    """Make a value JSON-safe; non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    return value


class ReportWriter:
    """
    Report assembly.

    Formats test results, Monte Carlo summaries, oracle checks and graph
    verdicts for the console, and wraps them with provenance into JSON.
    """

    @staticmethod
    def build_document(command: str, config: Dict[str, Any], result: Dict[str, Any]) -> Dict[str, Any]:
        """
        Wrap a result with the run configuration.

        Args:
            command: Subcommand that produced the result
            config: ``RunConfig.to_dict()``
            result: Result payload

        Returns:
            JSON-ready document
        """
        return _plain({
            "fullmed_version": __version__,
            "command": command,
            "config": config,
            "result": result,
        })

    @staticmethod
    def to_json(document: Dict[str, Any]) -> str:
        return json.dumps(_plain(document), indent=2, sort_keys=True) + "\n"

    @staticmethod
    def save_document(path: Path, content: str) -> Path:
        """
        Save a complete document.

        Args:
            path: Output path
            content: Document content

        Returns:
            Path to the saved file
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(content)
        return path

    @staticmethod
    def format_test(result: TestResult, alpha: float) -> str:
        """Console block for a test result."""
        verdict = "REJECT" if result.rejects(alpha) else "do not reject"
        lines = [
            f"   theta_hat:   {result.theta_hat:.6f}",
            f"   std. error:  {result.se:.6f}",
            f"   t-statistic: {result.t_stat:.4f}",
            f"   p-value:     {result.p_value:.4f} ({result.alternative})",
            f"   effective n: {result.n_effective} of {result.n}",
            f"   aggregation: {result.aggregation} ({len(result.per_split)} split(s))",
            f"   decision at alpha={alpha:g}: {verdict}",
        ]
        level_means = result.diagnostics.get("level_means")
        if level_means:
            for level, means in level_means.items():
                lines.append(f"   d={level}: mean q={means['q']:.4f}, mean zeta={means['zeta']:.4f}")
        return "\n".join(lines)

    @staticmethod
    def format_mc(report: McReport, config: DgpConfig) -> str:
        """Markdown table with one row for the experiment."""
        lines = [McReport.markdown_header(), report.markdown_row(config)]
        if report.reps_failed:
            lines.append(f"\n{report.reps_failed} replication(s) excluded")
        return "\n".join(lines)

    @staticmethod
    def format_check(result: CheckResult) -> str:
        status = "holds" if result.holds else "fails"
        return f"   {result.name}: {status} (max deviation {result.deviation:.3e})"

    @staticmethod
    def format_effects(report: EffectReport) -> str:
        def row(values: List[float]) -> str:
            return ", ".join(f"{v:.6f}" for v in values)

        return "\n".join([
            f"   ATE:    {report.ate:.6f}",
            f"   CDE(m): {row(report.cde)}",
            f"   NDE(d): {row(report.nde)}",
            f"   NIE(d): {row(report.nie)}",
        ])

    @staticmethod
    def format_verdict(verdict: Verdict, list_all: bool = False, limit: Optional[int] = 1) -> str:
        """Verdict line plus counterexample graphs in the edge-list format."""
        theorem = verdict.theorem
        if verdict.verified:
            status = "no counterexample"
        else:
            status = f"{len(verdict.counterexamples)} counterexample(s)"
        lines = [
            f"   Theorem {theorem.name}: {status} in {verdict.graphs_scanned} graphs",
            f"      {theorem.describe()}",
        ]
        shown = verdict.counterexamples if list_all else verdict.counterexamples[:limit]
        for number, graph in enumerate(shown, start=1):
            lines.append(f"      # counterexample {number}")
            lines.extend(f"      {line}" for line in graph.to_text().splitlines())
        return "\n".join(lines)

from __future__ import annotations

import json

import numpy as np
import pytest
from conftest import mediation_population

from fullmed.cli import create_parser, run
from fullmed.oracle import sample, save_population


def _write_csv(path, rows: int = 200, seed: int = 0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(rows, 2))
    d = (x[:, 0] + rng.normal(size=rows) > 0).astype(int)
    m = 0.5 * d + x[:, 1] + rng.normal(size=rows)
    y = m + x[:, 0] + rng.normal(size=rows)
    lines = ["y,d,m,x1,x2"] + [f"{a:.6f},{b},{c:.6f},{e:.6f},{f:.6f}" for a, b, c, (e, f) in zip(y, d, m, x)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_parser_lists_subcommands():
    help_text = create_parser().format_help()
    for command in ("test-ci", "test-bdfd", "simulate", "oracle", "verify-dags"):
        assert command in help_text


def test_bdfd_help_explains_the_zeta_modes(capsys):
    with pytest.raises(SystemExit) as exit_info:
        create_parser().parse_args(["test-bdfd", "--help"])
    assert exit_info.value.code == 0
    help_text = " ".join(capsys.readouterr().out.split())
    assert "almost no power" in help_text
    assert "--zeta integrated" in help_text


def test_verify_dags_writes_report(tmp_path):
    out = tmp_path / "verdict.json"
    assert run(["verify-dags", "--theorem", "all", "--out", str(out)]) == 0
    document = json.loads(out.read_text(encoding="utf-8"))
    assert [t["verified"] for t in document["result"]["theorems"]] == [True, True]


def test_test_ci_on_csv(tmp_path):
    data = _write_csv(tmp_path / "data.csv")
    out = tmp_path / "result.json"
    code = run([
        "test-ci", "--data", str(data), "--outcome", "y", "--treatment", "d",
        "--mediators", "m", "--covariates", "all-remaining", "--folds", "3", "--out", str(out),
    ])
    assert code == 0
    result = json.loads(out.read_text(encoding="utf-8"))["result"]
    assert 0.0 <= result["p"] <= 1.0
    assert result["n"] == 200


def test_missing_required_flag_is_a_usage_error(tmp_path):
    data = _write_csv(tmp_path / "data.csv")
    assert run(["test-ci", "--data", str(data), "--outcome", "y"]) == 1


def test_unknown_column_is_a_data_error(tmp_path):
    data = _write_csv(tmp_path / "data.csv")
    assert run(["test-ci", "--data", str(data), "--outcome", "y", "--treatment", "z", "--mediators", "m"]) == 2


def test_unknown_config_key_is_a_usage_error(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("folds = 3\nwarp.speed = 9\n", encoding="utf-8")
    assert run(["verify-dags", "--config", str(config)]) == 1


def test_oracle_actions_on_population_file(tmp_path):
    path = save_population(mediation_population(confounded=True), tmp_path / "world.json")
    out = tmp_path / "check.json"
    assert run(["oracle", "check-ti", "--population", str(path), "--out", str(out)]) == 0
    assert json.loads(out.read_text(encoding="utf-8"))["result"]["holds"] is True
    assert run(["oracle", "check-bdfd", "--population", str(path)]) == 0
    assert run(["oracle", "effects", "--population", str(path)]) == 0
    assert run(["oracle", "check-ti"]) == 1
    assert run(["oracle", "check-ti", "--population", str(tmp_path / "absent.json")]) == 2


def test_counterexample_search_writes_population(tmp_path):
    out = tmp_path / "witness.json"
    assert run(["oracle", "find-counterexample", "--budget", "500", "--seed", "3", "--out", str(out)]) == 0
    assert run(["oracle", "check-ti", "--population", str(out)]) == 0


def test_bdfd_with_continuous_mediator_is_a_usage_error(tmp_path):
    data = _write_csv(tmp_path / "data.csv")
    assert run(["test-bdfd", "--data", str(data), "--outcome", "y", "--treatment", "d", "--mediators", "m"]) == 1


def test_test_bdfd_on_discrete_csv(tmp_path):
    drawn = sample(mediation_population(), 600, np.random.default_rng(2))
    lines = ["y,d,m,x"] + [f"{a},{b},{int(c)},{int(e)}" for a, b, c, e in zip(drawn.y, drawn.d, drawn.m[:, 0], drawn.x[:, 0])]
    path = tmp_path / "discrete.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert run(["test-bdfd", "--data", str(path), "--outcome", "y", "--treatment", "d",
                "--mediators", "m", "--covariates", "x", "--folds", "3"]) == 0


def test_simulation_report_does_not_depend_on_threads(tmp_path, monkeypatch):
    args = ["simulate", "--n", "100", "--p", "3", "--reps", "2", "--folds", "3", "--seed", "4", "--out", "mc.json"]
    outputs = []
    for threads in ("1", "2"):
        workdir = tmp_path / f"threads{threads}"
        workdir.mkdir()
        monkeypatch.chdir(workdir)
        assert run(args + ["--threads", threads]) == 0
        outputs.append((workdir / "mc.json").read_bytes())
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize("argv", [["simulate", "--folds", "1"], ["simulate", "--dgp", "1", "--lambda", "0.5"]])
def test_invalid_settings_exit_with_usage_code(argv):
    assert run(argv) == 1

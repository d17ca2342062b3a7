"""
Tests for the CLI.
"""

import json
from unittest.mock import patch

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from schro_reg import __version__
from schro_reg.cli import cli
from schro_reg.errors import DivergenceError
from schro_reg.modes import MODE_HANDLERS

TINY = ["--n-cells", "16", "--dt", "1e-3", "--horizon", "0.5"]


@pytest.fixture
def runner():
    return CliRunner()


def write_scenario(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


class TestCLIBasics:
    """Test version and help output."""

    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "schro-reg" in result.output
        assert __version__ in result.output

    def test_help_lists_modes(self, runner):
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        for mode in ("kernels", "spectrum", "regulate", "observe", "closedloop", "verify"):
            assert mode in result.output


class TestConfigCommands:
    """Test config show and config init."""

    def test_show_reference(self, runner):
        result = runner.invoke(cli, ["config", "show"])
        assert result.exit_code == 0
        assert "Scenario:" in result.output
        assert "reference" in result.output
        assert "3 / 2" in result.output

    def test_show_invalid_file(self, runner, tmp_path):
        path = write_scenario(tmp_path / "bad.yaml", {"plant": {"q": -1.0}})
        result = runner.invoke(cli, ["config", "show", "--config", str(path)])
        assert result.exit_code == 2
        assert "Error loading scenario" in result.output

    def test_init(self, runner, tmp_path):
        path = tmp_path / "scenario.yaml"
        result = runner.invoke(cli, ["config", "init", str(path)])
        assert result.exit_code == 0
        assert path.exists()
        assert yaml.safe_load(path.read_text())["name"] == "reference"

        again = runner.invoke(cli, ["config", "init", str(path)])
        assert again.exit_code == 1

        forced = runner.invoke(cli, ["config", "init", str(path), "--force"])
        assert forced.exit_code == 0


class TestModeCommands:
    """Run modes on a tiny grid."""

    def test_kernels(self, runner, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(cli, ["kernels", "--out", str(out), *TINY])
        assert result.exit_code == 0, result.output
        for name in ("k", "K", "p", "P"):
            assert (out / f"kernel_{name}.csv").exists()
        report = json.loads((out / "kernels_report.json").read_text())
        assert report["n_cells"] == 16
        assert "Artifacts:" in result.output

    def test_regulate(self, runner, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(cli, ["regulate", "--out", str(out), *TINY])
        assert result.exit_code == 0, result.output
        for name in ("gains.json", "state_feedback.csv", "e_y.svg", "regulate_report.json"):
            assert (out / name).exists()
        header = (out / "state_feedback.csv").read_text().splitlines()[0]
        assert header.startswith("t,")

    def test_reuse_gains(self, runner, tmp_path):
        first = tmp_path / "first"
        runner.invoke(cli, ["regulate", "--out", str(first), *TINY])
        result = runner.invoke(
            cli,
            ["regulate", "--out", str(tmp_path / "second"), "--gains", str(first / "gains.json"), *TINY],
        )
        assert result.exit_code == 0, result.output

    def test_gains_from_other_grid(self, runner, tmp_path):
        first = tmp_path / "first"
        runner.invoke(cli, ["regulate", "--out", str(first), *TINY])
        result = runner.invoke(
            cli,
            [
                "regulate", "--out", str(tmp_path / "second"), "--gains", str(first / "gains.json"),
                "--n-cells", "20", "--dt", "1e-3", "--horizon", "0.5",
            ],
        )
        assert result.exit_code == 2

    def test_run_uses_scenario_mode(self, runner, tmp_path):
        path = write_scenario(tmp_path / "scenario.yaml", {"name": "tiny", "mode": "kernels"})
        out = tmp_path / "out"
        result = runner.invoke(cli, ["run", "--config", str(path), "--out", str(out), *TINY])
        assert result.exit_code == 0, result.output
        assert json.loads((out / "kernels_report.json").read_text())["scenario"] == "tiny"

    def test_run_without_mode(self, runner, tmp_path):
        result = runner.invoke(cli, ["run", "--out", str(tmp_path), *TINY])
        assert result.exit_code == 2


class TestExitCodes:
    """Test the error-to-exit-code mapping."""

    def test_too_few_cells(self, runner, tmp_path):
        result = runner.invoke(
            cli, ["kernels", "--out", str(tmp_path), "--n-cells", "4"]
        )
        assert result.exit_code == 2

    def test_missing_config(self, runner, tmp_path):
        result = runner.invoke(
            cli, ["kernels", "--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path)]
        )
        assert result.exit_code == 2
        assert "not found" in result.output

    def test_unobservable_reference(self, runner, tmp_path):
        path = write_scenario(tmp_path / "scenario.yaml", {"exosystem": {"q_r": [0.0, 0.0]}})
        result = runner.invoke(cli, ["kernels", "--config", str(path), "--out", str(tmp_path), *TINY])
        assert result.exit_code == 2

    def test_solvability_failure(self, runner, tmp_path):
        rotation = float(np.pi**2)
        path = write_scenario(
            tmp_path / "scenario.yaml",
            {
                "exosystem": {
                    "S_d": [[0.0, rotation], [-rotation, 0.0]],
                    "q_d1": [1.0, 0.0],
                    "q_d2": [0.0, 1.0],
                    "w0": [1.0, 0.0, 1.0, 0.0],
                },
                "tuning": {"c_o": 0.0},
            },
        )
        result = runner.invoke(
            cli,
            ["regulate", "--config", str(path), "--out", str(tmp_path / "out"),
             "--n-cells", "40", "--dt", "1e-3", "--horizon", "0.5"],
        )
        assert result.exit_code == 3, result.output
        assert "SolvabilityError" in result.output

    def test_divergence(self, runner, tmp_path):
        def diverge(ctx, out):
            raise DivergenceError("norm_z", 0.25, 2e6)

        with patch.dict(MODE_HANDLERS, {"closedloop": diverge}):
            result = runner.invoke(cli, ["closedloop", "--out", str(tmp_path), *TINY])
        assert result.exit_code == 4
        assert "diverged" in result.output

    def test_unexpected_error(self, runner, tmp_path):
        def broken(ctx, out):
            raise RuntimeError("boom")

        with patch.dict(MODE_HANDLERS, {"observe": broken}):
            result = runner.invoke(cli, ["observe", "--out", str(tmp_path), *TINY])
        assert result.exit_code == 1
        assert "boom" in result.output


class TestVerifyCommand:
    """Test the verify command without running the full suite."""

    def test_failures_exit_one(self, runner, tmp_path):
        summary = {"scenario": "reference", "passed": 11, "total": 12, "failed": [9], "exit_hint": 1}
        with patch.dict(MODE_HANDLERS, {"verify": lambda ctx, out, only: summary}):
            result = runner.invoke(cli, ["verify", "--out", str(tmp_path), *TINY])
        assert result.exit_code == 1
        assert "Failed criteria: 9" in result.output

    def test_only_is_passed_through(self, runner, tmp_path):
        seen = {}

        def fake(ctx, out, only):
            seen["only"] = only
            return {"scenario": "reference", "passed": 2, "total": 2, "failed": [], "exit_hint": 0}

        with patch.dict(MODE_HANDLERS, {"verify": fake}):
            result = runner.invoke(cli, ["verify", "--only", "2,10", "--out", str(tmp_path), *TINY])
        assert result.exit_code == 0, result.output
        assert seen["only"] == [2, 10]

    def test_bad_only(self, runner, tmp_path):
        result = runner.invoke(cli, ["verify", "--only", "1,x", "--out", str(tmp_path)])
        assert result.exit_code == 2


class TestReproducibility:
    """Identical invocations write identical artifacts."""

    def test_regulate_artifacts(self, runner, tmp_path):
        names = (
            "gains.json", "state_feedback.csv", "state_feedback_profiles.csv", "regulate_report.json"
        )
        outputs = []
        for label in ("first", "second"):
            out = tmp_path / label
            result = runner.invoke(cli, ["regulate", "--out", str(out), *TINY])
            assert result.exit_code == 0, result.output
            outputs.append({name: (out / name).read_bytes() for name in names})
        assert outputs[0] == outputs[1]

    def test_verify_report(self, runner, tmp_path):
        reports = []
        for label in ("first", "second"):
            out = tmp_path / label
            result = runner.invoke(cli, ["verify", "--only", "2,4", "--out", str(out), *TINY])
            assert result.exit_code in (0, 1), result.output
            reports.append((out / "report.json").read_bytes())
        assert reports[0] == reports[1]
        assert [c["id"] for c in json.loads(reports[0])["criteria"]] == [2, 4]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

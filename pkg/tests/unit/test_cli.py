"""Tests for the command-line interface."""

from pathlib import Path

import yaml
from typer.testing import CliRunner

from sidlab import __version__
from sidlab.cli import app
from sidlab.formatters import read_manifest

runner = CliRunner()

QUICK = ["-O", "integrator.horizon=0.1", "-O", "integrator.particles=4"]


def _run_dirs(out: Path, command: str) -> list[Path]:
    return sorted(p for p in out.iterdir() if p.name.startswith(f"{command}-"))


class TestCli:
    """Test cases for the sidlab commands."""

    def test_version(self) -> None:
        """Test --version."""
        result = runner.invoke(app, ["--version"])

        assert result.exit_code == 0
        assert __version__ in result.output

    def test_presets(self) -> None:
        """Test that every registered preset is listed."""
        result = runner.invoke(app, ["presets"])

        assert result.exit_code == 0
        assert "gle-k3" in result.output
        assert "two-species-demo" in result.output

    def test_config_init(self, tmp_path: Path) -> None:
        """Test writing a default config file."""
        path = tmp_path / "sidlab.yaml"

        result = runner.invoke(app, ["config", "--init", "--path", str(path)])

        assert result.exit_code == 0
        assert yaml.safe_load(path.read_text())["integrator"]["dt"] == 1e-3

    def test_config_bad_override(self) -> None:
        """Test that invalid values are reported with their path."""
        result = runner.invoke(app, ["config", "-O", "integrator.dt=-1"])

        assert result.exit_code == 1
        assert "integrator.dt" in result.output

    def test_simulate_and_rerun(self, tmp_path: Path) -> None:
        """Test a run and its repetition from the manifest."""
        out = tmp_path / "runs"
        result = runner.invoke(
            app, ["simulate", "--preset", "overdamped-quadratic-interacting", "--out", str(out), *QUICK]
        )
        assert result.exit_code == 0
        [first] = _run_dirs(out, "simulate")

        rerun = runner.invoke(app, ["rerun", str(first / "manifest.yaml")])

        assert rerun.exit_code == 0
        second = [p for p in _run_dirs(out, "simulate") if p != first]
        assert len(second) == 1
        assert (
            read_manifest(second[0] / "manifest.yaml")["artifacts"]
            == read_manifest(first / "manifest.yaml")["artifacts"]
        )

    def test_frozen_simulation_is_repeated_frozen(self, tmp_path: Path) -> None:
        """Test that rerun keeps the frozen flag of the original run."""
        out = tmp_path / "runs"
        runner.invoke(
            app,
            ["simulate", "--frozen", "--preset", "overdamped-quadratic-interacting", "--out", str(out), *QUICK],
        )
        [first] = _run_dirs(out, "simulate")

        runner.invoke(app, ["rerun", str(first / "manifest.yaml")])

        for run in _run_dirs(out, "simulate"):
            assert read_manifest(run / "manifest.yaml")["summary"]["frozen"] is True

    def test_unknown_preset(self, tmp_path: Path) -> None:
        """Test that an unknown preset exits with status 1."""
        result = runner.invoke(app, ["lambda", "--preset", "no-such-model", "--out", str(tmp_path)])

        assert result.exit_code == 1
        assert "Error" in result.output

    def test_lambda(self, tmp_path: Path) -> None:
        """Test the fixed-point command output."""
        result = runner.invoke(app, ["lambda", "--preset", "two-species-demo", "--out", str(tmp_path)])

        assert result.exit_code == 0
        assert "lambda" in result.output

    def test_report_needs_files(self) -> None:
        """Test that report without files is a usage error."""
        result = runner.invoke(app, ["report"])

        assert result.exit_code == 1
        assert "at least one" in result.output

    def test_rerun_missing_manifest(self, tmp_path: Path) -> None:
        """Test that a missing manifest exits with status 1."""
        result = runner.invoke(app, ["rerun", str(tmp_path / "manifest.yaml")])

        assert result.exit_code == 1

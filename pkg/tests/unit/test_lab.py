"""Tests for the experiment runner and the campaign report."""

from pathlib import Path

import numpy as np
import pytest

from sidlab.config.settings import Settings, load_settings
from sidlab.errors import ModelMismatchError, SimulationExplosionError, UsageError
from sidlab.exits import ExitCampaignResult, SigmaSamples, kramers_fit
from sidlab.formatters import (
    read_manifest,
    read_plot_data,
    read_trajectory,
    write_campaign,
    write_measure,
    write_plot_data,
)
from sidlab.lab import Lab, overlap_flags, report
from sidlab.measure import EmpiricalMeasure


def _campaign_file(path: Path, model_hash: str, predicted_h: float | None, shift: float = 0.0) -> Path:
    samples = [
        SigmaSamples.from_times(s, np.exp(shift + 0.6 / s**2 + np.tile([-0.1, 0.1], 20)))
        for s in (0.5, 0.6, 0.7)
    ]
    result = ExitCampaignResult(
        samples=samples,
        fit=kramers_fit(samples),
        seed=0,
        model_hash=model_hash,
        lam=np.zeros(1),
        predicted_h=predicted_h,
        reference_l=0.5,
    )
    return write_campaign(path, result)


class TestLabRuns:
    """Test cases for Lab commands."""

    def test_simulate_layout(self, quadratic_settings: Settings) -> None:
        """Test the run directory, its artifacts and the manifest."""
        result = Lab(quadratic_settings).simulate()

        assert result.output_dir.name.startswith("simulate-")
        assert result.output_dir.name.endswith("-s0")
        assert set(result.artifacts) == {"trajectory.txt", "final_measure.txt"}
        manifest = read_manifest(result.manifest_path)
        assert manifest["command"] == "simulate"
        assert manifest["artifacts"] == result.artifacts
        times, states = read_trajectory(result.output_dir / "trajectory.txt")
        assert times[-1] == pytest.approx(1.0)
        assert states.shape[1:] == (32, 1)

    def test_rerun_is_identical(self, quadratic_settings: Settings) -> None:
        """Test that a run repeated from its manifest reproduces the artifacts."""
        first = Lab(quadratic_settings).simulate()

        second = Lab.from_manifest(first.manifest_path).simulate()

        assert second.output_dir != first.output_dir
        assert second.artifacts == first.artifacts

    def test_failed_run_leaves_nothing(self, tmp_path: Path) -> None:
        """Test that a failing run removes its scratch directory."""
        settings = load_settings(
            preset="overdamped-quadratic-interacting",
            output_dir=str(tmp_path / "runs"),
            overrides=["integrator.explosion_guard=1e-9", "integrator.particles=4"],
        )

        with pytest.raises(SimulationExplosionError):
            Lab(settings).simulate()

        assert list((tmp_path / "runs").iterdir()) == []

    def test_fixed_point(self, interacting_settings: Settings) -> None:
        """Test the lambda command summary."""
        result = Lab(interacting_settings).fixed_point()

        assert result.summary["lambda"] == pytest.approx([0.0])
        assert result.artifacts == {}

    def test_campaign_with_frozen(self, tmp_path: Path) -> None:
        """Test the paired campaign files and their comparison."""
        settings = load_settings(
            preset="overdamped-quadratic-interacting",
            output_dir=str(tmp_path / "runs"),
            overrides=[
                "campaign.sigmas=[0.5, 0.6, 0.7]",
                "campaign.replicas=3",
                "campaign.horizon=0.2",
                "campaign.dt=0.01",
                "integrator.particles=8",
            ],
        )

        result = Lab(settings).campaign(with_frozen=True)

        assert {"campaign-interacting.txt", "campaign-frozen.txt"} <= set(result.artifacts)
        assert set(result.summary["campaigns"]) == {"interacting", "frozen"}
        assert result.summary["comparison"]["sigmas"] == [0.5, 0.6, 0.7]
        assert result.summary["reference_l"] == pytest.approx(1.0)
        assert result.summary["predicted_h"] == pytest.approx(0.55)

    def test_quasipotential(self, tmp_path: Path) -> None:
        """Test the closed form, the action and the reduction on the repulsive model."""
        settings = load_settings(
            preset="overdamped-quadratic-interacting",
            output_dir=str(tmp_path / "runs"),
            overrides=["quasipotential.nodes=80", "quasipotential.targets=2"],
        )

        result = Lab(settings).quasipotential()

        assert result.summary["elliptic_h"] == pytest.approx(0.55)
        assert result.summary["action"]["value"] == pytest.approx(0.55, rel=5e-2)
        assert result.summary["reduction"]["status"] == "certified"
        assert "action-path.txt" in result.artifacts

    def test_toychain(self, tmp_path: Path) -> None:
        """Test the exponent spread run."""
        settings = load_settings(
            output_dir=str(tmp_path / "runs"),
            overrides=["toychain.samples=200", "toychain.sigma_sq=[0.3, 0.2]"],
        )

        result = Lab(settings).toychain()

        assert result.summary["sigma_sq"] == [0.3, 0.2]
        assert "exponent-spread.txt" in result.artifacts

    def test_gronwall(self, tmp_path: Path) -> None:
        """Test the suite summary and one overlay per kernel."""
        settings = load_settings(
            output_dir=str(tmp_path / "runs"),
            overrides=["gronwall.draws=2", "gronwall.horizon=5.0", "gronwall.dt=0.05"],
        )

        result = Lab(settings).gronwall()

        assert result.summary["pass_rate"] == 1.0
        assert {f"envelope-{k}.txt" for k in ("dirac", "uniform", "exponential")} <= set(result.artifacts)

    def test_check(self, interacting_settings: Settings) -> None:
        """Test the assumption report of the repulsive model."""
        settings = interacting_settings.model_copy(
            update={"probe": interacting_settings.probe.model_copy(update={"samples": 200})}
        )

        result = Lab(settings).check()

        assert result.summary["invariance"]["stays_inside"]
        assert result.summary["lipschitz"]["kappa_z"] == pytest.approx(0.9, rel=1e-6)
        assert not result.summary["fluctuation_dissipation"]["applicable"]
        assert result.summary["predicted_h"] == pytest.approx(0.55)


class TestReport:
    """Test cases for report and overlap_flags."""

    def test_predicted_inside(self, tmp_path: Path) -> None:
        """Test that a matching prediction passes and L is carried over."""
        path = _campaign_file(tmp_path / "a.txt", "m1", predicted_h=0.3)

        rows = report([path]).rows

        assert len(rows) == 1
        assert rows[0].exponent == pytest.approx(0.3)
        assert rows[0].reference == pytest.approx(0.5)
        assert rows[0].passed

    def test_predicted_outside(self, tmp_path: Path) -> None:
        """Test that a distant prediction fails."""
        path = _campaign_file(tmp_path / "a.txt", "m1", predicted_h=0.6)

        assert report([path]).rows[0].passed is False

    def test_mixed_models(self, tmp_path: Path) -> None:
        """Test that files from different models are refused."""
        a = _campaign_file(tmp_path / "a.txt", "m1", predicted_h=0.3)
        b = _campaign_file(tmp_path / "b.txt", "m2", predicted_h=0.3)

        with pytest.raises(ModelMismatchError):
            report([a, b])

    def test_nothing_to_report(self, tmp_path: Path) -> None:
        """Test that an empty list or one without campaign and plot files is a usage error."""
        measure = write_measure(tmp_path / "m.txt", EmpiricalMeasure.uniform([[0.0]]))

        with pytest.raises(UsageError):
            report([])
        with pytest.raises(UsageError):
            report([measure])

    def test_plot_series_bundled(self, tmp_path: Path) -> None:
        """Test that plot-data files from other runs are copied into the report."""
        run = tmp_path / "gronwall-abc-s0"
        run.mkdir()
        envelope = write_plot_data(
            run / "envelope-dirac.txt",
            "envelope overlay (dirac kernel)",
            ["time", "extremal", "envelope"],
            [[0.0, 1.0, 1.0]],
        )
        gap = write_plot_data(
            tmp_path / "coupling-gap.txt",
            "coupling gap decay",
            ["time", "mean_gap_sq", "stderr", "bound"],
            [[0.0, 0.0, 0.0, 1.0]],
        )

        bundle = report([envelope, gap], output=tmp_path / "report")

        assert bundle.rows == []
        copied = tmp_path / "report" / "gronwall-abc-s0-envelope-dirac.txt"
        assert bundle.series[str(copied)] == "envelope"
        assert read_plot_data(copied).rows.tolist() == [[0.0, 1.0, 1.0]]
        assert set(bundle.series.values()) == {"envelope", "coupling gap"}

    def test_bundle_without_output(self, tmp_path: Path) -> None:
        """Test that series are listed in place when no output is given."""
        spread = write_plot_data(
            tmp_path / "exponent-spread.txt",
            "exponent spread histogram",
            ["log_time_scaled", "density"],
            [[0.5, 1.0]],
        )

        bundle = report([spread])

        assert bundle.series == {str(spread): "exponent spread"}
        assert bundle.output is None

    def test_regressions_and_table_written(self, tmp_path: Path) -> None:
        """Test the regression series and the consolidated table in the output directory."""
        path = _campaign_file(tmp_path / "a.txt", "m1", predicted_h=0.3)

        bundle = report([path], output=tmp_path / "report")

        regression = tmp_path / "report" / "regression-a.txt"
        assert bundle.series[str(regression)] == "kramers regression"
        table = read_plot_data(tmp_path / "report" / "exit-exponents.txt")
        assert table.header["files"] == [str(path)]
        assert table.rows[0, 0] == pytest.approx(0.3)
        assert table.rows[0, 3:].tolist() == pytest.approx([0.3, 0.5, 1.0])

    def test_overlap(self, tmp_path: Path) -> None:
        """Test that identical fits overlap."""
        a = _campaign_file(tmp_path / "a.txt", "m1", predicted_h=None)
        b = _campaign_file(tmp_path / "b.txt", "m1", predicted_h=None, shift=0.5)

        flags = overlap_flags(report([a, b]).rows)

        assert flags == [(str(a), str(b), True)]

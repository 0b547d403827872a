"""Tests for the self-consistent rest point."""

from pathlib import Path

import numpy as np
import pytest

from sidlab.config.settings import load_settings
from sidlab.errors import ConvergenceError, DivergenceError
from sidlab.fixedpoint import drift_rest_point, find_lambda, fixed_point_residual, pi_map
from sidlab.model import ModelConfig, build_model


def _model(tmp_path: Path, *overrides: str, preset: str | None = None) -> ModelConfig:
    settings = load_settings(preset=preset, output_dir=str(tmp_path), overrides=list(overrides))
    return build_model(settings.model)


class TestPiMap:
    """Test cases for pi_map and drift_rest_point."""

    def test_linear_pi(self, interacting_model: ModelConfig) -> None:
        """Test Π(v) = −(0.9/1.1)v for the repulsive quadratic model."""
        assert pi_map(interacting_model, [1.0]) == pytest.approx([-0.9 / 1.1])

    def test_drift_rest_point_kinetic(self, kinetic_model: ModelConfig) -> None:
        """Test that the kinetic drift rests at (center, 0)."""
        assert drift_rest_point(kinetic_model) == pytest.approx([0.5, 0.0])

    def test_quartic_rest_point(self, tmp_path: Path) -> None:
        """Test Newton on a nonlinear confinement."""
        config = _model(
            tmp_path,
            "model.drift.potential.kind=quartic",
            "model.drift.potential.center=[0.3]",
            "model.drift.potential.quartic=5.0",
        )

        assert drift_rest_point(config, start=[4.0]) == pytest.approx([0.3], abs=1e-10)


class TestFindLambda:
    """Test cases for find_lambda."""

    def test_non_interacting(self, quadratic_model: ModelConfig) -> None:
        """Test that λ is the minimizer of the potential."""
        result = find_lambda(quadratic_model)

        assert result.lam == pytest.approx([0.0])
        assert result.residual <= 1e-12

    def test_shifted_center(self, tmp_path: Path) -> None:
        """Test that quadratic repulsion keeps λ at the potential center."""
        config = _model(
            tmp_path, "model.drift.potential.center=[1.0]", preset="overdamped-quadratic-interacting"
        )

        assert find_lambda(config).lam == pytest.approx([1.0])

    def test_two_species(self, tmp_path: Path) -> None:
        """Test the two-species rest point (−0.15, 0.85)."""
        config = _model(tmp_path, preset="two-species-demo")
        result = find_lambda(config)

        assert result.lam == pytest.approx([-0.15, 0.85], abs=1e-10)
        assert fixed_point_residual(config, result.lam) <= 1e-10

    def test_contraction_ratio(self, interacting_model: ModelConfig) -> None:
        """Test that the observed gap ratio matches |Π′| = 9/11."""
        result = find_lambda(interacting_model, start=[1.0])

        assert result.lam == pytest.approx([0.0], abs=1e-11)
        assert result.contraction_ratio == pytest.approx(9.0 / 11.0, rel=1e-6)
        assert result.to_dict()["iterations"] == result.iterations

    def test_divergence(self, tmp_path: Path) -> None:
        """Test that an expanding Π is reported as divergence."""
        config = _model(
            tmp_path,
            "model.interaction.family=quadratic-repulsive",
            "model.interaction.alpha=0.8",
        )

        with pytest.raises(DivergenceError):
            find_lambda(config, start=[1.0], divergence_radius=1e3)

    def test_iteration_cap(self, interacting_model: ModelConfig) -> None:
        """Test that running out of iterations raises with the last iterate."""
        with pytest.raises(ConvergenceError):
            find_lambda(interacting_model, start=[1.0], max_iterations=2)

    def test_residual(self, interacting_model: ModelConfig) -> None:
        """Test |a(λ) + b(λ, δ_λ)| away from the rest point."""
        assert fixed_point_residual(interacting_model, np.array([0.5])) == pytest.approx(1.0)

"""Tests for closed-form exit costs, discrete actions and the reduction probe."""

from pathlib import Path

import numpy as np
import pytest

from sidlab.config.settings import load_settings
from sidlab.errors import InwardFlowError, NotGradientError
from sidlab.exits import Domain, ball
from sidlab.model import ModelConfig, build_model
from sidlab.quasipotential import (
    DiscretePath,
    action_of_path,
    boundary_minimum,
    effective_potential,
    elliptic_exponent,
    exit_action,
    exit_cost_gap,
    kinetic_action,
    kinetic_H,
    minimize_action,
    reduction_probe,
)


def _product(center: float, radius: float) -> Domain:
    return Domain(kind="product", center=np.array([center]), radius=radius)


class TestClosedForm:
    """Test cases for the closed-form exponents."""

    def test_quadratic_exponent(self, quadratic_model: ModelConfig) -> None:
        """Test H = V(r) − V(0) = r² for V(x) = x²."""
        assert elliptic_exponent(quadratic_model, [0.0], ball([0.0], 0.5)) == pytest.approx(0.25)

    def test_repulsion_lowers_exponent(self, interacting_model: ModelConfig) -> None:
        """Test U_λ = 0.55x² and the gap to the bare confinement."""
        domain = ball([0.0], 0.5)

        assert elliptic_exponent(interacting_model, [0.0], domain) == pytest.approx(0.1375)
        assert exit_cost_gap(interacting_model, [0.0], domain) == pytest.approx(0.1125)

    def test_effective_potential(self, interacting_model: ModelConfig) -> None:
        """Test that −∇U_λ is the frozen drift."""
        potential = effective_potential(interacting_model, [0.0])
        z = np.array([[0.3], [-0.7]])

        assert potential.value(z) == pytest.approx(0.55 * z[:, 0] ** 2)
        assert potential.gradient(z) == pytest.approx(1.1 * z)

    def test_kinetic_exponent(self, kinetic_model: ModelConfig) -> None:
        """Test γ/m² · (V(r) − V(λ′)) with γ = 2 and m² = 2."""
        assert elliptic_exponent(kinetic_model, [0.5, 0.0], _product(0.5, 1.0)) == pytest.approx(0.5)

    def test_kinetic_outward_force(self, kinetic_model: ModelConfig) -> None:
        """Test that a domain away from the well is refused."""
        with pytest.raises(InwardFlowError) as info:
            kinetic_H(kinetic_model.drift.potential, [3.0], _product(3.0, 0.5))

        assert info.value.flux < 0

    def test_kinetic_is_not_gradient(self, kinetic_model: ModelConfig) -> None:
        """Test that the elliptic potential needs an overdamped drift."""
        with pytest.raises(NotGradientError):
            effective_potential(kinetic_model, [0.5, 0.0])

    def test_sphere_minimum(self) -> None:
        """Test the boundary search on an anisotropic bowl."""
        value, point = boundary_minimum(
            lambda z: z[:, 0] ** 2 + 4.0 * z[:, 1] ** 2, ball([0.0, 0.0], 1.0), samples=64
        )

        assert value == pytest.approx(1.0, abs=1e-9)
        assert abs(point[0]) == pytest.approx(1.0, abs=1e-6)

    def test_polytope_minimum(self) -> None:
        """Test the face-by-face search on an interval."""
        domain = Domain(kind="halfspaces", normals=np.array([[1.0], [-1.0]]), offsets=np.array([0.5, 0.8]))

        value, point = boundary_minimum(lambda z: z[:, 0] ** 2, domain)

        assert value == pytest.approx(0.25, abs=1e-8)
        assert point == pytest.approx([0.5], abs=1e-6)


class TestAction:
    """Test cases for path actions and their minimization."""

    def test_straight_line_without_drift(self) -> None:
        """Test ¼∫|φ̇|² = ¼ for a unit-speed path on [0, 1]."""
        path = DiscretePath.straight([0.0], [1.0], horizon=1.0, nodes=100)

        assert action_of_path(path, np.zeros_like, np.eye(1)) == pytest.approx(0.25)

    def test_drift_path_is_free(self) -> None:
        """Test that following the drift costs nothing."""
        times = np.linspace(0.0, 2.0, 4001)
        path = DiscretePath(times, np.exp(-2.0 * times))

        assert action_of_path(path, lambda z: -2.0 * z, np.eye(1)) == pytest.approx(0.0, abs=1e-6)

    def test_degenerate_noise(self) -> None:
        """Test that a velocity outside the range of M has infinite action."""
        path = DiscretePath.straight([0.0, 0.0], [0.0, 1.0], horizon=1.0, nodes=10)

        assert action_of_path(path, np.zeros_like, np.diag([1.0, 0.0])) == np.inf

    def test_kinetic_action_at_rest(self) -> None:
        """Test that a path at rest in the well costs nothing."""
        path = DiscretePath.straight([0.5], [0.5], horizon=1.0, nodes=10)

        assert kinetic_action(path, lambda z: z - 0.5, friction=2.0) == 0.0

    def test_path_validation(self) -> None:
        """Test that times must increase."""
        with pytest.raises(ValueError):
            DiscretePath(np.array([0.0, 0.0]), np.zeros((2, 1)))

    def test_minimum_matches_quasipotential(self, quadratic_model: ModelConfig) -> None:
        """Test that the minimized action approaches V(x) − V(0) from above."""
        result = minimize_action(quadratic_model, [0.0], [0.5])

        assert result.value == pytest.approx(0.25, rel=2e-2)
        assert result.path.states[0] == pytest.approx([0.0])
        assert result.path.states[-1] == pytest.approx([0.5])
        assert len(result.values_by_horizon) == 8

    def test_exit_action(self, interacting_model: ModelConfig) -> None:
        """Test the minimized exit action against the closed form."""
        result = exit_action(interacting_model, [0.0], ball([0.0], 0.5), targets=2, nodes=100)

        assert result.value == pytest.approx(0.1375, rel=3e-2)


class TestReduction:
    """Test cases for reduction_probe."""

    def test_repulsion_certified(self, interacting_model: ModelConfig) -> None:
        """Test ⟨b, b − 4∇U⟩ = −6.39z² < 0 away from λ."""
        report = reduction_probe(interacting_model, [0.0], ball([0.0], 1.0), resolution=21)

        assert report.certified
        assert report.checked == 20
        assert report.max_value < 0.0

    def test_attraction_violated(self, tmp_path: Path) -> None:
        """Test that attraction raises the exit cost."""
        settings = load_settings(
            output_dir=str(tmp_path),
            overrides=["model.interaction.family=quadratic-attractive", "model.interaction.alpha=0.5"],
        )

        report = reduction_probe(build_model(settings.model), [0.0], ball([0.0], 1.0), resolution=21)

        assert report.status == "violated"
        assert report.violating

    def test_kinetic_not_applicable(self, kinetic_model: ModelConfig) -> None:
        """Test that non-gradient confinements are skipped."""
        report = reduction_probe(kinetic_model, [0.5, 0.0], _product(0.5, 1.0))

        assert report.status == "not-applicable"
        assert report.to_dict()["checked"] == 0

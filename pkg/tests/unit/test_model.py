"""Tests for drifts, interactions, kernels and model assembly."""

import numpy as np
import pytest

from sidlab.config.settings import load_settings
from sidlab.errors import ConfigError, DimensionMismatchError
from sidlab.measure import EmpiricalMeasure
from sidlab.model import (
    AbpBias,
    ConvolutionGradient,
    DiffusionMatrix,
    GaussianRepulsion,
    InitialLaw,
    InteractionField,
    KineticDrift,
    MemoryKernel,
    ModelConfig,
    OverdampedDrift,
    QuadraticAttraction,
    QuadraticRepulsion,
    TwoSpecies,
    ZeroInteraction,
    build_model,
    evaluate_drift,
    kernel_weights,
    make_potential,
    memory_mass,
    vanishing_memory,
)


class TestPotentials:
    """Test cases for confining potentials."""

    def test_quadratic_gradient(self) -> None:
        """Test the gradient of a quadratic potential."""
        potential = make_potential("quadratic", [1.0, 0.0], hessian=[[2.0, 0.0], [0.0, 4.0]])

        assert potential.gradient(np.array([2.0, 1.0])) == pytest.approx([2.0, 4.0])
        assert potential.value(np.array([2.0, 1.0])) == pytest.approx(3.0)
        assert potential.convexity == pytest.approx(2.0)

    def test_quadratic_requires_positive_definite(self) -> None:
        """Test that an indefinite Hessian is rejected."""
        with pytest.raises(ValueError):
            make_potential("quadratic", [0.0, 0.0], hessian=[[1.0, 0.0], [0.0, -1.0]])

    def test_quartic_gradient(self) -> None:
        """Test the gradient of the quartic potential."""
        potential = make_potential("quartic", [0.0], stiffness=1.0, quartic=2.0)

        # (ρ + q r²) u at u = 1
        assert potential.gradient(np.array([1.0])) == pytest.approx([3.0])

    def test_unknown_kind(self) -> None:
        """Test that unknown potential kinds are rejected."""
        with pytest.raises(ValueError):
            make_potential("sextic", [0.0])


class TestDrifts:
    """Test cases for confinement drifts."""

    def test_overdamped(self) -> None:
        """Test a(x) = −∇U(x)."""
        drift = OverdampedDrift(potential=make_potential("quadratic", [0.0], stiffness=2.0))

        assert drift.evaluate(np.array([1.5])) == pytest.approx([-3.0])
        assert drift.jacobian(np.array([0.0])) == pytest.approx(np.array([[-2.0]]))

    def test_kinetic(self) -> None:
        """Test a(x, y) = (y, −∇V(x) − γy)."""
        drift = KineticDrift(potential=make_potential("quadratic", [0.5], stiffness=1.0), friction=2.0)

        assert drift.dim == 2
        assert drift.evaluate(np.array([1.5, 1.0])) == pytest.approx([1.0, -3.0])

    def test_wrapped_drift(self) -> None:
        """Test the wrapped field D⁻¹a(Dz)."""
        drift = KineticDrift(
            potential=make_potential("quadratic", [0.0], stiffness=1.0),
            friction=2.0,
            change_of_variable=np.array([[1.0, 0.0], [-1.0, 1.0]]),
        )
        z = np.array([0.3, -0.4])
        d_mat = drift.change_of_variable
        assert d_mat is not None

        expected = np.linalg.solve(d_mat, drift.evaluate(d_mat @ z))
        assert evaluate_drift(drift, z) == pytest.approx(expected)

    def test_singular_change_of_variable(self) -> None:
        """Test that a singular change of variable is rejected."""
        with pytest.raises(ValueError):
            KineticDrift(
                potential=make_potential("quadratic", [0.0]),
                change_of_variable=np.array([[1.0, 1.0], [1.0, 1.0]]),
            )

    def test_dimension_check(self) -> None:
        """Test that states of the wrong dimension are rejected."""
        drift = OverdampedDrift(potential=make_potential("quadratic", [0.0]))

        with pytest.raises(DimensionMismatchError):
            drift.evaluate(np.zeros(2))


class TestInteractions:
    """Test cases for interaction drifts."""

    def test_zero(self) -> None:
        """Test the zero interaction."""
        field = ZeroInteraction(dim=2)

        assert field.evaluate_dirac(np.ones(2), np.zeros(2)) == pytest.approx([0.0, 0.0])

    def test_quadratic_repulsion(self) -> None:
        """Test b(z, μ) = 2α(z − mean μ)."""
        field = QuadraticRepulsion(dim=1, alpha=0.45)
        measure = EmpiricalMeasure.uniform([-1.0, 3.0])

        assert field.evaluate(np.array([2.0]), measure) == pytest.approx([0.9])

    def test_quadratic_attraction(self) -> None:
        """Test b(z, μ) = α(mean μ − z)."""
        field = QuadraticAttraction(dim=1, alpha=0.5)

        assert field.evaluate_dirac(np.array([1.0]), np.array([3.0])) == pytest.approx([1.0])

    def test_quadratic_convolution_matches_repulsion(self, rng: np.random.Generator) -> None:
        """Test that the quadratic profile reproduces quadratic repulsion."""
        measure = EmpiricalMeasure.uniform(rng.normal(size=(5, 2)))
        points = rng.normal(size=(3, 2))

        convolution = ConvolutionGradient(dim=2, alpha=0.3)
        repulsion = QuadraticRepulsion(dim=2, alpha=0.3)

        assert convolution.evaluate(points, measure) == pytest.approx(repulsion.evaluate(points, measure))

    def test_gaussian_repulsion_pushes_apart(self) -> None:
        """Test that the Gaussian repulsion points away from the atom."""
        field = GaussianRepulsion(dim=1, alpha=1.0, beta=1.0)

        assert field.evaluate_dirac(np.array([0.5]), np.array([0.0]))[0] > 0.0
        assert field.evaluate_dirac(np.array([-0.5]), np.array([0.0]))[0] < 0.0

    @pytest.mark.parametrize(
        "field",
        [
            QuadraticRepulsion(dim=2, alpha=0.4),
            GaussianRepulsion(dim=2, alpha=0.7, beta=1.3),
            TwoSpecies(dim=2, coefficients=np.array([[-0.2, 0.3], [-0.3, -0.2]])),
        ],
    )
    def test_dirac_jacobian(self, field: InteractionField, rng: np.random.Generator) -> None:
        """Test analytic Dirac Jacobians against central differences."""
        points = rng.normal(size=(4, 2))
        v = rng.normal(size=2)

        analytic = field.jacobian_dirac(points, v)
        finite = InteractionField.jacobian_dirac(field, points, v)

        assert analytic == pytest.approx(finite, abs=1e-6)

    def test_dirac_potential_gradient(self) -> None:
        """Test that the Dirac potential differentiates to the field."""
        field = GaussianRepulsion(dim=1, alpha=0.7, beta=1.3)
        v = np.array([0.2])
        z = np.array([0.9])
        h = 1e-6

        potential_plus = field.dirac_potential(z + h, v)
        potential_minus = field.dirac_potential(z - h, v)
        assert potential_plus is not None and potential_minus is not None
        numeric = (potential_plus - potential_minus) / (2 * h)

        assert field.evaluate_dirac(z, v)[0] == pytest.approx(float(numeric), rel=1e-5)

    def test_abp_bias_finite(self) -> None:
        """Test that the adaptive bias stays finite far from the cloud."""
        field = AbpBias(dim=1, omega=0.05, eps=0.5, eps_prime=1.0)
        measure = EmpiricalMeasure.uniform([[0.0], [0.1]])

        values = field.evaluate(np.array([[0.0], [50.0]]), measure)

        assert np.all(np.isfinite(values))

    def test_two_species_even_dimension(self) -> None:
        """Test that two-species states need an even dimension."""
        with pytest.raises(DimensionMismatchError):
            TwoSpecies(dim=3, coefficients=np.zeros((2, 2)))


class TestKernels:
    """Test cases for memory kernels."""

    def test_dirac_weights(self) -> None:
        """Test that the Dirac kernel weighs only the newest time."""
        weights = kernel_weights(MemoryKernel("dirac"), [0.0, 1.0, 2.0], 2.0)

        assert weights == pytest.approx([0.0, 0.0, 1.0])

    def test_uniform_weights(self) -> None:
        """Test trapezoid weights of the uniform kernel."""
        weights = kernel_weights(MemoryKernel("uniform"), [0.0, 1.0, 2.0], 2.0)

        assert weights == pytest.approx([0.25, 0.5, 0.25])

    def test_exponential_weights_favor_recent(self) -> None:
        """Test that exponential weights grow towards the present."""
        weights = kernel_weights(MemoryKernel("exponential", rate=2.0), np.linspace(0, 3, 7), 3.0)

        assert weights.sum() == pytest.approx(1.0)
        assert np.all(np.diff(weights[1:-1]) > 0)

    def test_times_after_now(self) -> None:
        """Test that snapshots from the future are rejected."""
        with pytest.raises(ValueError):
            kernel_weights(MemoryKernel("uniform"), [0.0, 2.0], 1.0)

    @pytest.mark.parametrize("kind", ["dirac", "uniform", "exponential"])
    def test_vanishing_memory(self, kind: str) -> None:
        """Test that the mass on an initial segment decays to zero."""
        masses = vanishing_memory(MemoryKernel(kind), 1.0, [2.0, 10.0, 100.0])

        assert np.all(np.diff(masses) <= 1e-12)
        assert masses[-1] < 0.02

    def test_uniform_memory_mass(self) -> None:
        """Test R(t, [0, s]) = s/t for the uniform kernel."""
        assert memory_mass(MemoryKernel("uniform"), 1.0, 10.0) == pytest.approx(0.1, abs=1e-3)


class TestModelConfig:
    """Test cases for model assembly."""

    def test_build_preset(self, interacting_model: ModelConfig) -> None:
        """Test the interacting quadratic preset."""
        assert interacting_model.dim == 1
        assert isinstance(interacting_model.interaction, QuadraticRepulsion)
        assert interacting_model.declared_rho == 0.65
        assert interacting_model.declared_kappa == 0.45

    def test_frozen_drift(self, interacting_model: ModelConfig) -> None:
        """Test a(z) + b(z, δ_λ) at λ = 0."""
        # −2z + 0.9z
        assert interacting_model.frozen_drift(np.zeros(1), np.array([1.0])) == pytest.approx([-1.1])
        assert interacting_model.frozen_jacobian(np.zeros(1), np.array([1.0])) == pytest.approx(
            np.array([[-1.1]])
        )

    def test_model_hash_ignores_sigma(self, quadratic_model: ModelConfig) -> None:
        """Test that the hash is stable and independent of σ."""
        assert len(quadratic_model.model_hash()) == 16
        assert quadratic_model.with_sigma(0.9).model_hash() == quadratic_model.model_hash()

    def test_model_hash_tracks_parameters(self, quadratic_model: ModelConfig, interacting_model: ModelConfig) -> None:
        """Test that different models hash differently."""
        assert quadratic_model.model_hash() != interacting_model.model_hash()

    def test_dimension_mismatch(self) -> None:
        """Test that components must agree on the dimension."""
        with pytest.raises(DimensionMismatchError):
            ModelConfig(
                drift=OverdampedDrift(potential=make_potential("quadratic", [0.0])),
                interaction=ZeroInteraction(dim=2),
                diffusion=DiffusionMatrix.scaled_identity(1),
                kernel=MemoryKernel("dirac"),
                initial=InitialLaw(kind="point", center=np.zeros(1)),
                sigma=0.5,
            )

    def test_build_reports_config_error(self) -> None:
        """Test that inconsistent settings become ConfigError."""
        settings = load_settings(
            overrides=["model.interaction.family=two-species", "model.interaction.coefficients=[[0, 0], [0, 0]]"]
        )

        with pytest.raises(ConfigError, match="model.interaction"):
            build_model(settings.model)

    def test_missing_coefficients(self) -> None:
        """Test that two-species without coefficients is a configuration error."""
        settings = load_settings(overrides=["model.interaction.family=two-species"])

        with pytest.raises(ConfigError, match="coefficients"):
            build_model(settings.model)

    def test_ball_initial_law(self, rng: np.random.Generator) -> None:
        """Test that ball samples stay inside the ball."""
        law = InitialLaw(kind="ball", center=np.array([1.0, -1.0]), radius=0.5)
        samples = law.sample(200, rng)

        assert samples.shape == (200, 2)
        assert np.all(np.linalg.norm(samples - law.center, axis=1) <= 0.5 + 1e-12)
        assert law.support_radius(np.array([1.0, -1.0])) == pytest.approx(0.5)

"""Model assembly: drift, interaction, diffusion, kernel, initial law and σ."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.errors import ConfigError, DimensionMismatchError
from sidlab.measure.empirical import EmpiricalMeasure
from sidlab.model.diffusion import DiffusionMatrix
from sidlab.model.drift import (
    ColoredNoiseDrift,
    CustomQuadraticDrift,
    DriftField,
    GeneralizedLangevinDrift,
    KineticDrift,
    OverdampedDrift,
)
from sidlab.model.interaction import (
    INTERACTION_FAMILIES,
    AbpBias,
    ConvolutionGradient,
    GaussianRepulsion,
    InteractionField,
    QuadraticAttraction,
    QuadraticRepulsion,
    TwoSpecies,
    ZeroInteraction,
)
from sidlab.model.kernels import MemoryKernel
from sidlab.model.potentials import make_potential

if TYPE_CHECKING:
    from sidlab.config.settings import ModelSettings


@dataclass(frozen=True, eq=False)
class InitialLaw:
    """Compactly supported initial law μ₀.

    Attributes:
        kind: ``point`` (δ_center), ``ball`` (uniform on ball(center, radius))
            or ``empirical`` (resampled from a measure).
        center: Point or ball center.
        radius: Ball radius.
        measure: Source measure of the empirical kind.
    """

    kind: Literal["point", "ball", "empirical"]
    center: NDArray[np.float64] | None = None
    radius: float = 0.0
    measure: EmpiricalMeasure | None = None

    def __post_init__(self) -> None:
        if self.kind in ("point", "ball") and self.center is None:
            raise ValueError(f"Initial law of kind '{self.kind}' needs a center")
        if self.kind == "empirical" and self.measure is None:
            raise ValueError("Empirical initial law needs a measure")
        if self.center is not None:
            object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))

    @property
    def dim(self) -> int:
        if self.measure is not None:
            return self.measure.dim
        assert self.center is not None
        return self.center.size

    def support_radius(self, about: ArrayLike) -> float:
        """Radius of the smallest ball around ``about`` holding the support."""
        about = np.asarray(about, dtype=float)
        if self.kind == "empirical":
            assert self.measure is not None
            return float(np.max(np.linalg.norm(self.measure.positions - about, axis=1)))
        assert self.center is not None
        return float(np.linalg.norm(self.center - about) + (self.radius if self.kind == "ball" else 0.0))

    def sample(self, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
        """n i.i.d. initial states, shape (n, d)."""
        if self.kind == "empirical":
            assert self.measure is not None
            return self.measure.resample(n, rng)
        assert self.center is not None
        if self.kind == "point" or self.radius == 0.0:
            return np.tile(self.center, (n, 1))
        d = self.center.size
        directions = rng.standard_normal((n, d))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = self.radius * rng.random(n) ** (1.0 / d)
        return self.center + radii[:, None] * directions

    def fingerprint(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "center": None if self.center is None else self.center.tolist(),
            "radius": self.radius,
            "measure": None
            if self.measure is None
            else [self.measure.positions.tolist(), self.measure.weights.tolist()],
        }


@dataclass(frozen=True, eq=False)
class ModelConfig:
    """Complete self-interacting diffusion model.

    dZ = [a(Z) + b(Z, μ_t)] dt + σ M dB with μ_t = ∫ R(t, ds) Law(Z_s).
    """

    drift: DriftField
    interaction: InteractionField
    diffusion: DiffusionMatrix
    kernel: MemoryKernel
    initial: InitialLaw
    sigma: float
    declared_rho: float | None = None
    declared_kappa: float | None = None
    name: str = "custom"

    def __post_init__(self) -> None:
        d = self.drift.dim
        for label, dim in (
            ("interaction", self.interaction.dim),
            ("diffusion", self.diffusion.dim),
            ("initial law", self.initial.dim),
        ):
            if dim != d:
                raise DimensionMismatchError(f"{label} has dimension {dim}, drift has {d}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.declared_rho is not None and self.declared_kappa is not None:
            if not self.declared_rho > self.declared_kappa >= 0:
                raise ValueError("Declared constants must satisfy rho > kappa >= 0")

    @property
    def dim(self) -> int:
        return self.drift.dim

    def with_sigma(self, sigma: float) -> ModelConfig:
        return replace(self, sigma=sigma)

    def frozen_drift(self, lam: ArrayLike, z: ArrayLike) -> NDArray[np.float64]:
        """a(z) + b(z, δ_λ)."""
        return self.drift.evaluate(z) + self.interaction.evaluate_dirac(z, lam)

    def frozen_jacobian(self, lam: ArrayLike, z: ArrayLike) -> NDArray[np.float64]:
        batch = np.atleast_2d(np.asarray(z, dtype=float))
        jac = self.drift.jacobian(batch) + self.interaction.jacobian_dirac(batch, lam)
        return jac[0] if np.ndim(z) == 1 else jac

    def fingerprint(self) -> dict[str, Any]:
        """JSON-compatible description of everything except σ."""
        return {
            "drift": self.drift.fingerprint(),
            "interaction": self.interaction.fingerprint(),
            "diffusion": self.diffusion.fingerprint(),
            "kernel": self.kernel.fingerprint(),
            "initial": self.initial.fingerprint(),
        }

    def model_hash(self) -> str:
        """Stable short hash of :meth:`fingerprint`."""
        payload = json.dumps(self.fingerprint(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _build_drift(settings: Any) -> DriftField:
    potential = None
    if settings.potential is not None:
        p = settings.potential
        potential = make_potential(
            p.kind, p.center, stiffness=p.stiffness, hessian=p.hessian, quartic=p.quartic
        )
    common = {"change_of_variable": settings.change_of_variable}
    family = settings.family
    if family != "custom-quadratic" and potential is None:
        raise ConfigError(f"model.drift.potential: required for the {family} family")
    try:
        if family == "overdamped":
            return OverdampedDrift(potential=potential, **common)
        if family == "kinetic":
            return KineticDrift(potential=potential, friction=settings.friction, **common)
        if family == "colored-noise":
            if settings.coupling is None or settings.noise_drift is None:
                raise ConfigError("model.drift: colored-noise needs coupling and noise_drift")
            return ColoredNoiseDrift(
                potential=potential,
                coupling=settings.coupling,
                noise_drift=settings.noise_drift,
                **common,
            )
        if family == "generalized-langevin":
            if settings.memory_blocks is None:
                raise ConfigError("model.drift.memory_blocks: required for generalized-langevin")
            return GeneralizedLangevinDrift(
                potential=potential,
                friction=settings.friction,
                memory_blocks=settings.memory_blocks,
                **common,
            )
        if settings.matrix is None or settings.center is None:
            raise ConfigError("model.drift: custom-quadratic needs matrix and center")
        return CustomQuadraticDrift(matrix=settings.matrix, center=settings.center, **common)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"model.drift: {e}") from e


def _build_interaction(settings: Any, dim: int) -> InteractionField:
    family = settings.family
    if family not in INTERACTION_FAMILIES:
        raise ConfigError(f"model.interaction.family: unknown family '{family}'")
    try:
        if family == "zero":
            return ZeroInteraction(dim=dim)
        if family == "quadratic-repulsive":
            return QuadraticRepulsion(dim=dim, alpha=settings.alpha)
        if family == "quadratic-attractive":
            return QuadraticAttraction(dim=dim, alpha=settings.alpha)
        if family == "convolution-gradient":
            return ConvolutionGradient(
                dim=dim,
                alpha=settings.alpha,
                beta=settings.beta,
                profile=settings.profile,
                output=settings.output_matrix,
            )
        if family == "gaussian-repulsion":
            return GaussianRepulsion(
                dim=dim, alpha=settings.alpha, beta=settings.beta, output=settings.output_matrix
            )
        if family == "abp-bias":
            return AbpBias(
                dim=dim,
                omega=settings.omega,
                eps=settings.eps,
                eps_prime=settings.eps_prime,
                output=settings.output_matrix,
                reaction_coordinate=settings.reaction_coordinate,
            )
        if settings.coefficients is None:
            raise ConfigError("model.interaction.coefficients: required for two-species")
        return TwoSpecies(dim=dim, coefficients=settings.coefficients)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"model.interaction: {e}") from e


def _build_initial(settings: Any, dim: int) -> InitialLaw:
    if settings.kind == "empirical":
        if not settings.path:
            raise ConfigError("model.init.path: required for the empirical kind")
        from sidlab.formatters.records import read_measure

        return InitialLaw(kind="empirical", measure=read_measure(Path(settings.path)))
    center = settings.center if settings.center is not None else [0.0] * dim
    return InitialLaw(kind=settings.kind, center=np.asarray(center, dtype=float), radius=settings.radius)


def build_model(settings: ModelSettings) -> ModelConfig:
    """Assemble a :class:`ModelConfig` from validated model settings.

    Raises:
        ConfigError: When the settings describe an inconsistent model.
    """
    drift = _build_drift(settings.drift)
    dim = drift.dim
    interaction = _build_interaction(settings.interaction, dim)

    if settings.diffusion.matrix is not None:
        diffusion = DiffusionMatrix(np.asarray(settings.diffusion.matrix, dtype=float))
    else:
        diffusion = DiffusionMatrix.scaled_identity(dim, settings.diffusion.scale)

    try:
        return ModelConfig(
            drift=drift,
            interaction=interaction,
            diffusion=diffusion,
            kernel=MemoryKernel(kind=settings.kernel.kind, rate=settings.kernel.rate),
            initial=_build_initial(settings.init, dim),
            sigma=settings.sigma,
            declared_rho=settings.declared_rho,
            declared_kappa=settings.declared_kappa,
            name=settings.name,
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"model: {e}") from e

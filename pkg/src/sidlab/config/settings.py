"""Configuration management for sidlab using Pydantic Settings."""

from __future__ import annotations

import copy
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from sidlab.config.defaults import (
    DEFAULT_ACTION_NODES,
    DEFAULT_BOUNDARY_SAMPLES,
    DEFAULT_CENSOR_LIMIT,
    DEFAULT_CONFIDENCE,
    DEFAULT_DT,
    DEFAULT_ENVELOPE_DEPTH,
    DEFAULT_EXPLOSION_GUARD,
    DEFAULT_GRONWALL_DT,
    DEFAULT_GRONWALL_HORIZON,
    DEFAULT_HORIZON,
    DEFAULT_HORIZON_MULTIPLIER,
    DEFAULT_MAX_SNAPSHOTS,
    DEFAULT_MIN_REPLICAS,
    DEFAULT_MODEL,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_PARTICLES,
    DEFAULT_PROBE_RADIUS,
    DEFAULT_PROBE_SAMPLES,
    DEFAULT_REPLICAS,
    DEFAULT_SPREAD_WINDOW,
    DEFAULT_STRIDE,
    DEFAULT_TOYCHAIN_SAMPLES,
)
from sidlab.errors import ConfigError

Matrix = list[list[float]]


class PotentialSettings(BaseModel):
    """Confining potential descriptor."""

    kind: Literal["quadratic", "quartic"] = Field(
        default="quadratic",
        description="quadratic: ½(x−c)ᵀH(x−c); quartic: ρ/2|x−c|² + q/4|x−c|⁴",
    )
    center: list[float] = Field(default_factory=lambda: [0.0], description="Minimizer c")
    stiffness: float | None = Field(
        default=None, gt=0, description="Scalar curvature ρ (H = ρI when no hessian is given)"
    )
    hessian: Matrix | None = Field(default=None, description="Full Hessian for quadratic kind")
    quartic: float = Field(default=0.0, ge=0, description="Quartic coefficient q")


class DriftSettings(BaseModel):
    """Confinement drift a(z)."""

    family: Literal[
        "overdamped", "kinetic", "colored-noise", "generalized-langevin", "custom-quadratic"
    ] = Field(default="overdamped", description="Drift family tag")
    potential: PotentialSettings | None = Field(default_factory=PotentialSettings)
    friction: float = Field(default=1.0, gt=0, description="Friction γ")
    coupling: Matrix | None = Field(default=None, description="Colored noise coupling B (n×p)")
    noise_drift: Matrix | None = Field(default=None, description="Colored noise drift F (p×p)")
    memory_blocks: Matrix | None = Field(
        default=None, description="Generalized Langevin block matrix on (y, w)"
    )
    matrix: Matrix | None = Field(default=None, description="Custom linear field K in −K(z−c)")
    center: list[float] | None = Field(default=None, description="Custom linear field center")
    change_of_variable: Matrix | None = Field(
        default=None, description="Invertible D with wrapped drift D⁻¹a(Dz)"
    )


class InteractionSettings(BaseModel):
    """Interaction drift b(z, μ)."""

    family: Literal[
        "zero",
        "convolution-gradient",
        "quadratic-repulsive",
        "quadratic-attractive",
        "gaussian-repulsion",
        "abp-bias",
        "two-species",
    ] = Field(default="zero", description="Interaction family tag")
    alpha: float = Field(default=0.0, ge=0, description="Interaction strength α")
    beta: float = Field(default=1.0, gt=0, description="Gaussian profile width parameter β")
    profile: Literal["quadratic", "gaussian"] = Field(
        default="quadratic", description="Convolution profile W̃"
    )
    output_matrix: Matrix | None = Field(default=None, description="Output matrix A")
    omega: float = Field(default=1.0, description="Bias strength ω")
    eps: float = Field(default=0.1, gt=0, description="Smoothing kernel width ε")
    eps_prime: float = Field(default=0.1, gt=0, description="Log regularization ε′")
    reaction_coordinate: Matrix | None = Field(
        default=None, description="Linear reaction coordinate ξ(z) = Pz"
    )
    coefficients: Matrix | None = Field(
        default=None, description="Two-species linear couplings c_ij (2×2)"
    )


class KernelSettings(BaseModel):
    """Memory kernel R(t, ·)."""

    kind: Literal["dirac", "uniform", "exponential"] = Field(default="dirac")
    rate: float = Field(default=1.0, ge=0, description="Exponential forgetting rate η")


class DiffusionSettings(BaseModel):
    """Diffusion matrix M."""

    scale: float = Field(default=1.0, ge=0, description="M = scale·I when no matrix is given")
    matrix: Matrix | None = Field(default=None, description="Full diffusion matrix")


class InitSettings(BaseModel):
    """Initial law μ₀."""

    kind: Literal["point", "ball", "empirical"] = Field(default="point")
    center: list[float] | None = Field(default=None)
    radius: float = Field(default=0.0, ge=0)
    path: str | None = Field(default=None, description="Measure file for empirical kind")


class ModelSettings(BaseModel):
    """Complete model description."""

    name: str = Field(default="custom")
    drift: DriftSettings = Field(default_factory=DriftSettings)
    interaction: InteractionSettings = Field(default_factory=InteractionSettings)
    kernel: KernelSettings = Field(default_factory=KernelSettings)
    diffusion: DiffusionSettings = Field(default_factory=DiffusionSettings)
    init: InitSettings = Field(default_factory=InitSettings)
    sigma: float = Field(default=0.5, ge=0, description="Noise level σ")
    declared_rho: float | None = Field(default=None, description="Declared dissipativity constant ρ")
    declared_kappa: float | None = Field(default=None, ge=0, description="Declared interaction Lipschitz constant κ")

    @model_validator(mode="after")
    def check_declared_constants(self) -> ModelSettings:
        """Declared constants must satisfy ρ > κ ≥ 0."""
        if self.declared_rho is not None and self.declared_kappa is not None:
            if not self.declared_rho > self.declared_kappa:
                raise ValueError("declared_rho must exceed declared_kappa")
        return self


class IntegratorSettings(BaseModel):
    """Euler–Maruyama integrator settings."""

    dt: float = Field(default=DEFAULT_DT, gt=0, description="Time step Δt")
    horizon: float = Field(default=DEFAULT_HORIZON, gt=0, description="Simulated time T")
    stride: int = Field(default=DEFAULT_STRIDE, ge=1, description="Steps between snapshots")
    particles: int = Field(default=DEFAULT_PARTICLES, ge=1, description="Particle count N")
    max_snapshots: int = Field(default=DEFAULT_MAX_SNAPSHOTS, ge=3)
    record_stride: int = Field(default=1, ge=1, description="Steps between recorded states")
    stream: int = Field(default=0, ge=0, description="Stream index for RNG derivation")
    explosion_guard: float = Field(default=DEFAULT_EXPLOSION_GUARD, gt=0)


class DomainSettings(BaseModel):
    """Exit domain D."""

    kind: Literal["ball", "product", "halfspaces"] = Field(default="ball")
    center: list[float] | None = Field(default=None, description="Defaults to λ")
    radius: float = Field(default=1.0, gt=0)
    position_dims: int | None = Field(
        default=None, ge=1, description="Leading coordinates constrained by a product domain"
    )
    normals: Matrix | None = Field(default=None)
    offsets: list[float] | None = Field(default=None)


class CampaignSettings(BaseModel):
    """Exit-time campaign settings."""

    sigmas: list[float] | None = Field(default=None, description="Noise levels σ")
    replicas: int = Field(default=DEFAULT_REPLICAS, ge=1)
    mode: Literal["tagged", "per-particle"] = Field(default="tagged")
    process: Literal["interacting", "frozen"] = Field(default="interacting")
    particles: int | None = Field(default=None, ge=1, description="Overrides integrator N")
    dt: float | None = Field(default=None, gt=0, description="Fixed Δt (skips σ²/10 cap)")
    horizon: float | None = Field(default=None, gt=0)
    horizon_multiplier: float = Field(default=DEFAULT_HORIZON_MULTIPLIER, gt=0)
    predicted_h: float | None = Field(default=None, gt=0)
    prefactor_power: float = Field(default=0.0, description="q in mean log τ − q·log σ²")
    min_replicas: int = Field(default=DEFAULT_MIN_REPLICAS, ge=1)
    censor_limit: float = Field(default=DEFAULT_CENSOR_LIMIT, gt=0, le=1)
    confidence: float = Field(default=DEFAULT_CONFIDENCE, gt=0, lt=1)


class ProbeSettings(BaseModel):
    """Assumption probe settings."""

    samples: int = Field(default=DEFAULT_PROBE_SAMPLES, ge=10)
    radius: float = Field(default=DEFAULT_PROBE_RADIUS, gt=0)


class QuasipotentialSettings(BaseModel):
    """Action minimization settings."""

    nodes: int = Field(default=DEFAULT_ACTION_NODES, ge=4)
    boundary_samples: int = Field(default=DEFAULT_BOUNDARY_SAMPLES, ge=2)
    targets: int = Field(default=8, ge=1, description="Boundary targets for action minimization")
    reduction_grid: int = Field(default=41, ge=3)


class GronwallSettings(BaseModel):
    """Memory-Gronwall suite settings."""

    draws: int = Field(default=100, ge=1)
    dt: float = Field(default=DEFAULT_GRONWALL_DT, gt=0)
    horizon: float = Field(default=DEFAULT_GRONWALL_HORIZON, gt=0)
    max_depth: int = Field(default=DEFAULT_ENVELOPE_DEPTH, ge=1)
    kernels: list[Literal["dirac", "uniform", "exponential"]] = Field(
        default_factory=lambda: ["dirac", "uniform", "exponential"]
    )


class ToychainSettings(BaseModel):
    """Two-state chain study settings."""

    a01: float = Field(default=1.0, gt=0)
    a10: float = Field(default=1.0, gt=0)
    alpha: float = Field(default=0.4, ge=0)
    sigma_sq: list[float] = Field(default_factory=lambda: [0.3, 0.2, 0.12, 0.08])
    samples: int = Field(default=DEFAULT_TOYCHAIN_SAMPLES, ge=1)
    window: float = Field(default=DEFAULT_SPREAD_WINDOW, gt=0)


class Settings(BaseSettings):
    """Main settings class for sidlab."""

    model_config = SettingsConfigDict(
        env_prefix="SIDLAB_",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
    )

    # Nested settings
    model: ModelSettings = Field(default_factory=lambda: ModelSettings(**DEFAULT_MODEL))
    integrator: IntegratorSettings = Field(default_factory=IntegratorSettings)
    domain: DomainSettings = Field(default_factory=DomainSettings)
    campaign: CampaignSettings = Field(default_factory=CampaignSettings)
    probe: ProbeSettings = Field(default_factory=ProbeSettings)
    quasipotential: QuasipotentialSettings = Field(default_factory=QuasipotentialSettings)
    gronwall: GronwallSettings = Field(default_factory=GronwallSettings)
    toychain: ToychainSettings = Field(default_factory=ToychainSettings)

    # General settings
    seed: int = Field(default=0, ge=0, description="Campaign seed")
    workers: int = Field(default=1, ge=1, description="Worker processes")
    output_dir: str = Field(default=DEFAULT_OUTPUT_DIR)
    verbose: bool = Field(default=False, description="Enable verbose output")
    debug: bool = Field(default=False, description="Enable debug mode")
    log_file: str | None = Field(default=None, description="Path to log file (optional)")

    @model_validator(mode="before")
    @classmethod
    def load_from_config_file(cls, values: dict[str, Any]) -> dict[str, Any]:
        """Load settings from config file if specified."""
        config_file = values.pop("config_file", None) or os.environ.get("SIDLAB_CONFIG_FILE")

        if config_file:
            config_path = Path(config_file)
            if config_path.exists():
                # Provided values take precedence over file values
                return deep_merge(read_config_file(config_path), values)

        return values

    def to_dict(self) -> dict[str, Any]:
        """Convert settings to a JSON-compatible dictionary."""
        return self.model_dump(mode="json")

    def to_yaml(self) -> str:
        """Emit settings as YAML."""
        return yaml.safe_dump(self.to_dict(), default_flow_style=False, sort_keys=False)

    def save_to_file(self, path: str | Path) -> None:
        """Save settings to a YAML file."""
        path = Path(path)
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_yaml())


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Read a YAML config file into a dictionary."""
    config_path = Path(path)
    if config_path.suffix not in (".yaml", ".yml"):
        raise ConfigError(f"Unsupported config format: {config_path.suffix}")
    with open(config_path, encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {config_path} must contain a mapping")
    return data


def deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    """Merge ``update`` into a copy of ``base``; nested mappings merge recursively."""
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(expression: str) -> dict[str, Any]:
    """Turn ``a.b.c=value`` into ``{"a": {"b": {"c": value}}}``.

    Values go through ``yaml.safe_load`` so numbers, booleans and lists
    come out typed.
    """
    if "=" not in expression:
        raise ConfigError(f"Override '{expression}' must have the form key.path=value")
    key, raw = expression.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"Override '{expression}' has an empty key")
    value: Any = yaml.safe_load(raw) if raw.strip() else None
    for part in reversed(parts):
        value = {part: value}
    return value


def format_validation_error(error: ValidationError) -> str:
    """One ``dotted.path: reason`` line per schema violation."""
    lines = []
    for item in error.errors():
        path = ".".join(str(p) for p in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return "\n".join(lines)


def settings_from_yaml(text: str) -> Settings:
    """Parse settings emitted by :meth:`Settings.to_yaml`."""
    data = yaml.safe_load(text) or {}
    try:
        return Settings(**data)
    except ValidationError as e:
        raise ConfigError(format_validation_error(e)) from e


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


def load_settings(
    config_file: str | Path | None = None,
    *,
    preset: str | None = None,
    overrides: list[str] | None = None,
    **values: Any,
) -> Settings:
    """Load settings from a preset, a config file, keyword values and overrides.

    Later sources win: preset < config file < keyword values < overrides.

    Raises:
        ConfigError: On unknown presets or schema violations.
    """
    from sidlab.config.presets import get_preset

    data: dict[str, Any] = {}
    if preset:
        data = deep_merge(data, get_preset(preset))
    if config_file:
        data = deep_merge(data, read_config_file(config_file))
    data = deep_merge(data, {k: v for k, v in values.items() if v is not None})
    for expression in overrides or []:
        data = deep_merge(data, parse_override(expression))

    try:
        return Settings(**data)
    except ValidationError as e:
        raise ConfigError(format_validation_error(e)) from e

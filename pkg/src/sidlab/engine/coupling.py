"""Parallel coupling: two systems driven by the same Gaussian increments."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.config.settings import IntegratorSettings
from sidlab.engine.particles import ParticleSystem
from sidlab.errors import DimensionMismatchError
from sidlab.measure.empirical import EmpiricalMeasure, second_moment_about
from sidlab.measure.wasserstein import w2_matched
from sidlab.model.config import ModelConfig
from sidlab.utils.rng import stream

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


@dataclass
class CouplingResult:
    """Gap series of a coupled run.

    Attributes:
        times: Grid t₀..t_K, shape (K+1,).
        gap_sq: |ΔZᵢ|² per particle, shape (K+1, N).
        drift_gap_sq: |ΔFᵢ|² of the drifts used in each step, shape (K, N).
        w2_sq: Matched W₂² of the two interaction measures at each step start, shape (K,).
    """

    times: FloatArray
    gap_sq: FloatArray
    drift_gap_sq: FloatArray
    w2_sq: FloatArray
    dt: float
    sigma_a: float
    sigma_b: float
    dim: int
    diffusion_norm: float
    final_a: FloatArray
    final_b: FloatArray

    @property
    def mean_gap_sq(self) -> FloatArray:
        """Per-step estimate of E|ΔZ|²."""
        return self.gap_sq.mean(axis=1)

    @property
    def mean_gap_stderr(self) -> FloatArray:
        n = self.gap_sq.shape[1]
        if n < 2:
            return np.zeros(self.gap_sq.shape[0])
        return self.gap_sq.std(axis=1, ddof=1) / math.sqrt(n)

    def to_dict(self) -> dict[str, Any]:
        return {
            "steps": int(self.times.size - 1),
            "dt": self.dt,
            "sigma_a": self.sigma_a,
            "sigma_b": self.sigma_b,
            "initial_gap_sq": float(self.mean_gap_sq[0]),
            "final_gap_sq": float(self.mean_gap_sq[-1]),
        }


@dataclass
class CouplingReport:
    """Outcome of the discrete checks of both coupling inequalities."""

    pathwise_checked: bool
    pathwise_violations: int
    pathwise_worst: float
    mean_square_violations: int
    mean_square_worst: float
    bound: FloatArray

    @property
    def passed(self) -> bool:
        return self.pathwise_violations == 0 and self.mean_square_violations == 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "pathwise_checked": self.pathwise_checked,
            "pathwise_violations": self.pathwise_violations,
            "pathwise_worst": self.pathwise_worst,
            "mean_square_violations": self.mean_square_violations,
            "mean_square_worst": self.mean_square_worst,
        }


def parallel_couple(
    config_a: ModelConfig,
    other: ModelConfig | ArrayLike,
    settings: IntegratorSettings,
    rng: np.random.Generator | None = None,
    *,
    seed: int = 0,
    initial_a: ArrayLike | None = None,
    initial_b: ArrayLike | None = None,
    sigma_b: float | None = None,
) -> CouplingResult:
    """Step two systems with identical increments and record their gaps.

    Args:
        config_a: First model.
        other: Second model, or a point λ for the frozen process of ``config_a``.
        settings: Shared integrator settings (Δt, horizon, N).
        rng: Shared generator.
        seed: Seed for the default stream.
        initial_a: Initial states of the first system (sampled when omitted).
        initial_b: Initial states of the second system; defaults to λ for the
            frozen process and to ``initial_a`` otherwise.
        sigma_b: Noise level of the frozen process (defaults to ``config_a.sigma``).

    Raises:
        DimensionMismatchError: If the models have different dimensions.
    """
    rng = rng if rng is not None else stream(seed, settings.stream, purpose="couple")
    system_a = ParticleSystem(config_a, settings, rng, initial=initial_a)
    start_a = system_a.state.copy()

    frozen_at: FloatArray | None = None
    if isinstance(other, ModelConfig):
        if other.dim != config_a.dim:
            raise DimensionMismatchError(
                f"Coupled models have dimensions {config_a.dim} and {other.dim}"
            )
        config_b = other
        start_b = start_a if initial_b is None else initial_b
        system_b = ParticleSystem(config_b, settings, rng, initial=start_b)
    else:
        frozen_at = np.asarray(other, dtype=float)
        if frozen_at.shape != (config_a.dim,):
            raise DimensionMismatchError(f"Frozen point must have shape ({config_a.dim},)")
        config_b = config_a if sigma_b is None else config_a.with_sigma(sigma_b)
        start_b = frozen_at if initial_b is None else initial_b
        system_b = ParticleSystem(
            config_b, settings, rng, initial=start_b, frozen_at=frozen_at,
            particles=system_a.particles,
        )
    if system_b.particles != system_a.particles:
        raise DimensionMismatchError("Coupled systems need the same particle count")

    total = max(1, math.ceil(settings.horizon / settings.dt - 1e-9))
    gap_sq = np.empty((total + 1, system_a.particles))
    drift_gap_sq = np.empty((total, system_a.particles))
    w2_sq = np.empty(total)
    gap_sq[0] = np.sum((system_a.state - system_b.state) ** 2, axis=1)

    for k in range(total):
        nu_a = system_a.interaction_measure()
        if frozen_at is not None:
            w2_sq[k] = second_moment_about(nu_a, frozen_at)
        else:
            w2_sq[k] = _matched_sq(nu_a, system_b.interaction_measure())
        drift_a, drift_b = system_a.drift(), system_b.drift()
        drift_gap_sq[k] = np.sum((drift_a - drift_b) ** 2, axis=1)
        noise = rng.standard_normal(system_a.state.shape)
        system_a.step(noise, drift_a)
        system_b.step(noise, drift_b)
        gap_sq[k + 1] = np.sum((system_a.state - system_b.state) ** 2, axis=1)

    return CouplingResult(
        times=np.arange(total + 1) * settings.dt,
        gap_sq=gap_sq,
        drift_gap_sq=drift_gap_sq,
        w2_sq=w2_sq,
        dt=settings.dt,
        sigma_a=config_a.sigma,
        sigma_b=config_b.sigma,
        dim=config_a.dim,
        diffusion_norm=config_a.diffusion.norm,
        final_a=system_a.state.copy(),
        final_b=system_b.state.copy(),
    )


def _matched_sq(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    return w2_matched(mu, nu) ** 2


def verify_coupling(result: CouplingResult, rho: float, kappa: float) -> CouplingReport:
    """Discrete checks of the two coupling inequalities.

    Pathwise (equal noise levels): the Euler remainder is exactly
    Δt²|ΔF|², so each particle must satisfy
    g_{k+1} ≤ g_k + Δt(−2ρ g_k + 2κ W_k) + Δt²|ΔF_k|².

    Mean square: the mean gap must stay below the discrete comparison
    solution f_{k+1} = f_k + Δt(d σ_Δ² ‖M‖² − 2ρ f_k + 2κ W_k) + Δt² mean|ΔF_k|²,
    up to four Monte Carlo standard errors.
    """
    dt = result.dt
    g = result.gap_sq
    w = result.w2_sq

    pathwise_checked = math.isclose(result.sigma_a, result.sigma_b)
    pathwise_violations = 0
    pathwise_worst = 0.0
    if pathwise_checked:
        rhs = g[:-1] + dt * (-2.0 * rho * g[:-1] + 2.0 * kappa * w[:, None]) + dt**2 * result.drift_gap_sq
        slack = 1e-9 * (g[:-1] + g[1:]) + 1e-14
        excess = g[1:] - rhs
        pathwise_violations = int(np.sum(excess > slack))
        pathwise_worst = float(excess.max())

    noise_sq = result.dim * (result.sigma_a - result.sigma_b) ** 2 * result.diffusion_norm**2
    f = result.mean_gap_sq
    bound = np.empty_like(f)
    bound[0] = f[0]
    mean_drift_gap = result.drift_gap_sq.mean(axis=1)
    for k in range(f.size - 1):
        bound[k + 1] = (
            bound[k]
            + dt * (noise_sq - 2.0 * rho * bound[k] + 2.0 * kappa * w[k])
            + dt**2 * mean_drift_gap[k]
        )
    tolerance = 4.0 * result.mean_gap_stderr + 1e-12
    excess_ms = f - bound
    mean_square_violations = int(np.sum(excess_ms > tolerance))

    if pathwise_violations or mean_square_violations:
        logger.warning(
            f"Coupling check: {pathwise_violations} pathwise and "
            f"{mean_square_violations} mean-square violations"
        )
    return CouplingReport(
        pathwise_checked=pathwise_checked,
        pathwise_violations=pathwise_violations,
        pathwise_worst=pathwise_worst,
        mean_square_violations=mean_square_violations,
        mean_square_worst=float(excess_ms.max()),
        bound=bound,
    )

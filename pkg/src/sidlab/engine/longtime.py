"""Small-noise and long-time probes of the particle system."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.config.settings import IntegratorSettings
from sidlab.engine.coupling import parallel_couple
from sidlab.engine.particles import ParticleSystem
from sidlab.model.config import InitialLaw, ModelConfig
from sidlab.utils.rng import stream

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


def _steps(settings: IntegratorSettings) -> int:
    return max(1, math.ceil(settings.horizon / settings.dt - 1e-9))


@dataclass
class ShadowingTable:
    """Exceedance probabilities P(sup_[0,T] |X^σ − X⁰| > ε) of the tagged particle.

    ``probabilities[i, j]`` belongs to ``sigmas[i]`` and ``epsilons[j]``.
    """

    sigmas: FloatArray
    epsilons: FloatArray
    probabilities: FloatArray
    stderr: FloatArray
    replicas: int

    @property
    def slope(self) -> float:
        """Least-squares c in P ≈ c·σ/ε (line through the origin)."""
        x = (self.sigmas[:, None] / self.epsilons[None, :]).ravel()
        y = self.probabilities.ravel()
        denom = float(x @ x)
        return float(x @ y) / denom if denom > 0 else 0.0

    def monotone_violations(self) -> int:
        """Pairs σ < σ′ whose probability exceeds that at σ′ by over 2 standard errors."""
        order = np.argsort(self.sigmas)
        p, se = self.probabilities[order], self.stderr[order]
        count = 0
        for i in range(p.shape[0]):
            for j in range(i + 1, p.shape[0]):
                count += int(np.sum(p[i] > p[j] + 2.0 * np.sqrt(se[i] ** 2 + se[j] ** 2)))
        return count

    def to_dict(self) -> dict[str, Any]:
        return {
            "sigmas": self.sigmas.tolist(),
            "epsilons": self.epsilons.tolist(),
            "probabilities": self.probabilities.tolist(),
            "replicas": self.replicas,
            "slope": self.slope,
        }


def shadowing_probe(
    config: ModelConfig,
    settings: IntegratorSettings,
    epsilons: Sequence[float],
    sigmas: Sequence[float],
    replicas: int,
    *,
    seed: int = 0,
) -> ShadowingTable:
    """Distance between the noisy system and its zero-noise counterpart.

    Every σ reuses the same initial states and Gaussian increments per
    replica (common random numbers), so only σ changes between runs.
    """
    sigmas_arr = np.asarray(sigmas, dtype=float)
    eps_arr = np.asarray(epsilons, dtype=float)
    total = _steps(settings)
    sup_dev = np.zeros((sigmas_arr.size, replicas))

    for r in range(replicas):
        initial = config.initial.sample(settings.particles, stream(seed, r, purpose="init"))
        baseline = ParticleSystem(
            config.with_sigma(0.0), settings, stream(seed, r, purpose="shadow"), initial=initial
        )
        reference = np.empty((total + 1, config.dim))
        reference[0] = baseline.state[0]
        for k in range(total):
            baseline.step(noise=np.zeros_like(baseline.state))
            reference[k + 1] = baseline.state[0]

        for i, sigma in enumerate(sigmas_arr):
            system = ParticleSystem(
                config.with_sigma(float(sigma)),
                settings,
                stream(seed, r, purpose="shadow"),
                initial=initial,
            )
            worst = 0.0
            for k in range(total):
                system.step()
                worst = max(worst, float(np.linalg.norm(system.state[0] - reference[k + 1])))
            sup_dev[i, r] = worst

    probabilities = np.mean(sup_dev[:, :, None] > eps_arr[None, None, :], axis=1)
    stderr = np.sqrt(probabilities * (1.0 - probabilities) / replicas)
    return ShadowingTable(sigmas_arr, eps_arr, probabilities, stderr, replicas)


@dataclass
class StationaryEstimate:
    """Long-run second moment of the cloud about λ."""

    second_moment: float
    stderr: float
    drift: float
    drift_stderr: float
    cloud: FloatArray

    @property
    def stable(self) -> bool:
        """Extra horizon moved the moment by less than 3 standard errors."""
        return abs(self.drift) < 3.0 * self.drift_stderr

    def to_dict(self) -> dict[str, Any]:
        return {
            "second_moment": self.second_moment,
            "stderr": self.stderr,
            "drift": self.drift,
            "drift_stderr": self.drift_stderr,
            "stable": self.stable,
        }


def _moment(cloud: FloatArray, lam: FloatArray) -> tuple[float, float]:
    values = np.sum((cloud - lam) ** 2, axis=1)
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), se


def estimate_stationary(
    config: ModelConfig,
    settings: IntegratorSettings,
    lam: ArrayLike,
    *,
    burn_in: float,
    extra: float,
    seed: int = 0,
) -> StationaryEstimate:
    """Run to ``burn_in``, measure ∫|z − λ|² of the cloud, then run ``extra`` longer."""
    lam = np.asarray(lam, dtype=float)
    system = ParticleSystem(config, settings, stream(seed, settings.stream, purpose="stationary"))
    for _ in range(max(1, math.ceil(burn_in / settings.dt - 1e-9))):
        system.step()
    first, first_se = _moment(system.state, lam)
    cloud = system.state.copy()
    for _ in range(max(1, math.ceil(extra / settings.dt - 1e-9))):
        system.step()
    second, second_se = _moment(system.state, lam)
    logger.info(f"Stationary second moment {first:.4g} ± {first_se:.2g} (σ={config.sigma:g})")
    return StationaryEstimate(
        second_moment=first,
        stderr=first_se,
        drift=second - first,
        drift_stderr=math.hypot(first_se, second_se),
        cloud=cloud,
    )


def stationary_bound(config: ModelConfig, rho: float, kappa: float, sigma: float | None = None) -> float:
    """d ‖M‖² σ² / (2(ρ − κ)), the low-noise bound on the stationary second moment about λ."""
    if not rho > kappa:
        raise ValueError("The stationary bound needs rho > kappa")
    sigma = config.sigma if sigma is None else sigma
    return config.dim * config.diffusion.norm**2 * sigma**2 / (2.0 * (rho - kappa))


@dataclass
class ContractionSeries:
    """Matched W₂ between two coupled clouds started from different laws."""

    sigma: float
    times: FloatArray
    distance: FloatArray

    @property
    def noise_floor(self) -> float:
        tail = self.distance[-max(1, self.distance.size // 10) :]
        return float(tail.mean())

    @property
    def decay_rate(self) -> float:
        """Log-linear fit of the distance above twice the noise floor."""
        mask = self.distance > 2.0 * self.noise_floor + 1e-12
        if mask.sum() < 3:
            return float("nan")
        slope = np.polyfit(self.times[mask], np.log(self.distance[mask]), 1)[0]
        return float(-slope)

    @property
    def contracted(self) -> bool:
        return bool(self.noise_floor < self.distance[0])


def contraction_probe(
    config: ModelConfig,
    settings: IntegratorSettings,
    initial_a: InitialLaw,
    initial_b: InitialLaw,
    sigmas: Sequence[float],
    *,
    seed: int = 0,
) -> list[ContractionSeries]:
    """Parallel-couple two interacting systems from different initial laws for each σ."""
    series = []
    for i, sigma in enumerate(sigmas):
        model = config.with_sigma(float(sigma))
        start_a = initial_a.sample(settings.particles, stream(seed, i, 0, purpose="init"))
        start_b = initial_b.sample(settings.particles, stream(seed, i, 1, purpose="init"))
        result = parallel_couple(
            model,
            model,
            settings,
            stream(seed, i, purpose="couple"),
            initial_a=start_a,
            initial_b=start_b,
        )
        series.append(
            ContractionSeries(
                sigma=float(sigma),
                times=result.times,
                distance=np.sqrt(result.mean_gap_sq),
            )
        )
    return series

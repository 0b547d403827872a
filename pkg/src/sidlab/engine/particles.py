"""Euler–Maruyama integration of the N-particle self-interacting system."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.config.settings import IntegratorSettings
from sidlab.errors import DimensionMismatchError, SimulationExplosionError
from sidlab.measure.empirical import EmpiricalMeasure
from sidlab.measure.store import SnapshotStore, mixture
from sidlab.model.config import ModelConfig
from sidlab.utils.rng import stream

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


@dataclass
class TrajectoryBatch:
    """Recorded particle states on a shared time grid.

    Attributes:
        times: Recorded times, shape (T,).
        states: States, shape (T, N, d).
        config: Originating model.
        stream_id: Label of the RNG stream that drove the run.
    """

    times: FloatArray
    states: FloatArray
    config: ModelConfig
    stream_id: str = ""

    def __post_init__(self) -> None:
        if self.states.shape[0] != self.times.shape[0]:
            raise DimensionMismatchError("States and time grid have different lengths")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("Trajectory states must be finite")

    @property
    def particles(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> FloatArray:
        return self.states[-1]

    def path(self, particle: int = 0) -> FloatArray:
        return self.states[:, particle, :]

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.config.name,
            "stream": self.stream_id,
            "steps": int(self.times.size - 1),
            "particles": self.particles,
            "horizon": float(self.times[-1]),
        }


class ParticleSystem:
    """Step-wise Euler–Maruyama integrator.

    Xᵢ ← Xᵢ + [a(Xᵢ) + b(Xᵢ, μ̂_t)] Δt + σ M √Δt ξᵢ

    μ̂_t is the live cloud for the dirac kernel (each particle sees its own
    atom), the kernel mixture of recorded snapshots otherwise, or δ_λ for
    the frozen process.
    """

    def __init__(
        self,
        config: ModelConfig,
        settings: IntegratorSettings,
        rng: np.random.Generator,
        *,
        initial: ArrayLike | None = None,
        frozen_at: ArrayLike | None = None,
        particles: int | None = None,
    ) -> None:
        self.config = config
        self.settings = settings
        self.rng = rng
        self.dt = settings.dt
        self.frozen_at = None if frozen_at is None else np.asarray(frozen_at, dtype=float)
        count = particles or settings.particles

        if initial is None:
            state = config.initial.sample(count, rng)
        else:
            state = np.array(initial, dtype=float)
            if state.ndim == 1:
                state = np.tile(state, (count, 1))
        if state.ndim != 2 or state.shape[1] != config.dim:
            raise DimensionMismatchError(
                f"Initial states of shape {state.shape} for a model of dimension {config.dim}"
            )
        self.state: FloatArray = state
        self.steps = 0
        self.store = SnapshotStore(settings.max_snapshots)
        self.store.append(0.0, EmpiricalMeasure.uniform(self.state))
        self._frozen_measure = (
            None if self.frozen_at is None else EmpiricalMeasure.dirac(self.frozen_at)
        )
        self._mixture: tuple[int, EmpiricalMeasure] | None = None

    @property
    def time(self) -> float:
        return self.steps * self.dt

    @property
    def particles(self) -> int:
        return self.state.shape[0]

    def interaction_measure(self) -> EmpiricalMeasure:
        if self._frozen_measure is not None:
            return self._frozen_measure
        if self.config.kernel.kind == "dirac":
            return EmpiricalMeasure.uniform(self.state)
        if self._mixture is None or self._mixture[0] != self.store.version:
            self._mixture = (
                self.store.version,
                mixture(self.store, self.config.kernel, self.store.last_time),
            )
        return self._mixture[1]

    def drift(self) -> FloatArray:
        """a(Xᵢ) + b(Xᵢ, μ̂_t) at the current state."""
        return self.config.drift.evaluate(self.state) + self.config.interaction.evaluate(
            self.state, self.interaction_measure()
        )

    def draw_noise(self) -> FloatArray:
        return self.rng.standard_normal(self.state.shape)

    def step(self, noise: FloatArray | None = None, drift: FloatArray | None = None) -> FloatArray:
        """Advance one step; ``noise`` holds standard normal increments ξ."""
        if noise is None:
            noise = self.draw_noise()
        if drift is None:
            drift = self.drift()
        sigma = self.config.sigma
        self.state = self.state + drift * self.dt
        if sigma > 0:
            self.state += sigma * math.sqrt(self.dt) * self.config.diffusion.apply(noise)
        self.steps += 1
        self._guard()
        if self._frozen_measure is None and self.steps % self.settings.stride == 0:
            self.store.append(self.time, EmpiricalMeasure.uniform(self.state))
        return self.state

    def _guard(self) -> None:
        sizes = np.linalg.norm(self.state, axis=1)
        bad = ~np.isfinite(sizes) | (sizes > self.settings.explosion_guard)
        if np.any(bad):
            particle = int(np.flatnonzero(bad)[0])
            raise SimulationExplosionError(self.steps, particle, float(sizes[particle]))


def _record(
    system: ParticleSystem, settings: IntegratorSettings, stream_id: str
) -> TrajectoryBatch:
    total = max(1, math.ceil(settings.horizon / settings.dt - 1e-9))
    times = [0.0]
    states = [system.state.copy()]
    for k in range(1, total + 1):
        system.step()
        if k % settings.record_stride == 0 or k == total:
            times.append(system.time)
            states.append(system.state.copy())
    logger.debug(f"Integrated {total} steps of {system.particles} particles ({stream_id})")
    return TrajectoryBatch(
        times=np.asarray(times), states=np.stack(states), config=system.config, stream_id=stream_id
    )


def simulate_particles(
    config: ModelConfig,
    settings: IntegratorSettings,
    rng: np.random.Generator | None = None,
    *,
    seed: int = 0,
    initial: ArrayLike | None = None,
) -> tuple[TrajectoryBatch, SnapshotStore]:
    """Simulate the N-particle system on [0, settings.horizon].

    Args:
        config: Model.
        settings: Integrator settings.
        rng: Generator; derived from ``(seed, settings.stream)`` when omitted.
        seed: Seed used to derive the default stream.
        initial: Optional initial states overriding the initial law.

    Returns:
        Recorded trajectories and the snapshot store.
    """
    if config.interaction.family != "zero" and settings.particles < 2 and initial is None:
        logger.warning("Interacting model simulated with a single particle")
    rng = rng if rng is not None else stream(seed, settings.stream, purpose="simulate")
    system = ParticleSystem(config, settings, rng, initial=initial)
    batch = _record(system, settings, f"simulate:{seed}:{settings.stream}")
    return batch, system.store


def simulate_linear_frozen(
    config: ModelConfig,
    lam: ArrayLike,
    settings: IntegratorSettings,
    rng: np.random.Generator | None = None,
    *,
    seed: int = 0,
) -> TrajectoryBatch:
    """Independent copies of dX̃ = [a(X̃) + b(X̃, δ_λ)] dt + σ M dB with X̃₀ = λ."""
    lam = np.asarray(lam, dtype=float)
    rng = rng if rng is not None else stream(seed, settings.stream, purpose="simulate")
    system = ParticleSystem(config, settings, rng, initial=lam, frozen_at=lam)
    return _record(system, settings, f"frozen:{seed}:{settings.stream}")

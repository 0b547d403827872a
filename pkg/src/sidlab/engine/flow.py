"""Deterministic zero-noise flows integrated with classical RK4."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.config.defaults import DEFAULT_EXPLOSION_GUARD
from sidlab.errors import SimulationExplosionError
from sidlab.measure.empirical import EmpiricalMeasure
from sidlab.model.config import ModelConfig

FloatArray = NDArray[np.float64]
VectorField = Callable[[FloatArray], FloatArray]


@dataclass
class FlowPath:
    """RK4 path on a uniform grid; ``states`` has shape (steps + 1, ..., d)."""

    times: FloatArray
    states: FloatArray

    @property
    def final(self) -> FloatArray:
        return self.states[-1]


def rk4_step(field: VectorField, z: FloatArray, h: float) -> FloatArray:
    k1 = field(z)
    k2 = field(z + 0.5 * h * k1)
    k3 = field(z + 0.5 * h * k2)
    k4 = field(z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_rk4(
    field: VectorField,
    z0: ArrayLike,
    horizon: float,
    dt: float,
    guard: float = DEFAULT_EXPLOSION_GUARD,
) -> FlowPath:
    """Integrate ż = field(z) on [0, horizon]; the last step is shortened to land on T.

    Raises:
        SimulationExplosionError: If the state leaves the guard radius.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    z = np.array(z0, dtype=float)
    steps = max(1, math.ceil(horizon / dt - 1e-9))
    times = np.minimum(np.arange(steps + 1) * dt, horizon)
    states = np.empty((steps + 1,) + z.shape)
    states[0] = z
    for k in range(steps):
        z = rk4_step(field, z, times[k + 1] - times[k])
        size = float(np.max(np.abs(z))) if z.size else 0.0
        if not math.isfinite(size) or size > guard:
            raise SimulationExplosionError(k + 1, 0, size)
        states[k + 1] = z
    return FlowPath(times=times, states=states)


def deterministic_flow(
    config: ModelConfig,
    v: ArrayLike | None,
    z0: ArrayLike,
    horizon: float,
    dt: float = 1e-3,
    *,
    self_consistent: bool = False,
) -> FlowPath:
    """ψ_t^v(z0): the flow of ż = a(z) + b(z, δ_v).

    Args:
        config: Model.
        v: Frozen interaction point (ignored when ``self_consistent``).
        z0: Start point (d,) or a batch of starts (k, d) sharing ``v``.
        horizon: Final time T.
        dt: RK4 step.
        self_consistent: Integrate ż = a(z) + b(z, δ_z) instead.
    """
    if self_consistent:

        def field(z: FloatArray) -> FloatArray:
            return config.drift.evaluate(z) + config.interaction.evaluate(
                z, EmpiricalMeasure.dirac(z)
            )

        if np.ndim(z0) != 1:
            raise ValueError("Self-consistent flow integrates a single start point")
    else:
        if v is None:
            raise ValueError("A frozen interaction point v is required")
        lam = np.asarray(v, dtype=float)

        def field(z: FloatArray) -> FloatArray:
            return config.frozen_drift(lam, z)

    return integrate_rk4(field, z0, horizon, dt)

"""Self-repelling two-state chain.

The chain on {0, 1} jumps i → j at rate exp(−b_ij(m)/σ²) with
b_ij(ν) = a_ij + α(ν(j) − ν(i)), where m is its own law. Starting from
δ₀, x_t = m_t(0) solves a scalar ODE and the exit time from {0} has the
closed-form survival exp(−∫₀ᵗ h(x_s) ds) with hazard
h(x) = exp((α(2x − 1) − a01)/σ²).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import cumulative_trapezoid, solve_ivp

from sidlab.config.defaults import DEFAULT_SPREAD_WINDOW
from sidlab.engine.flow import integrate_rk4
from sidlab.utils.rng import stream

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

_GRID_POINTS = 4000
_HAZARD_TARGET = 50.0


@dataclass(frozen=True)
class ChainParams:
    """Barrier heights, self-repulsion strength and noise level σ²."""

    a01: float
    a10: float
    alpha: float
    sigma_sq: float

    def __post_init__(self) -> None:
        if self.a01 <= 0 or self.a10 <= 0:
            raise ValueError("Barrier heights must be positive")
        if not 0 <= self.alpha < min(self.a01, self.a10):
            raise ValueError("Need 0 <= alpha < min(a01, a10)")
        if self.sigma_sq <= 0:
            raise ValueError("sigma_sq must be positive")

    @property
    def symmetric(self) -> bool:
        return self.a01 == self.a10

    def with_sigma_sq(self, sigma_sq: float) -> ChainParams:
        return ChainParams(self.a01, self.a10, self.alpha, sigma_sq)

    def hazard(self, x: ArrayLike) -> FloatArray:
        """Rate of 0 → 1 when a fraction x of the law sits on 0."""
        x = np.asarray(x, dtype=float)
        return np.exp((self.alpha * (2.0 * x - 1.0) - self.a01) / self.sigma_sq)

    def return_rate(self, x: ArrayLike) -> FloatArray:
        """Rate of 1 → 0."""
        x = np.asarray(x, dtype=float)
        return np.exp((self.alpha * (1.0 - 2.0 * x) - self.a10) / self.sigma_sq)

    def velocity(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        return -self.hazard(x) * x + self.return_rate(x) * (1.0 - x)

    def to_dict(self) -> dict[str, Any]:
        return {"a01": self.a01, "a10": self.a10, "alpha": self.alpha, "sigma_sq": self.sigma_sq}


@dataclass
class ChainPath:
    """Occupancy x_t and cumulative hazard on a time grid starting at 0."""

    params: ChainParams
    times: FloatArray
    occupancy: FloatArray
    cumulative_hazard: FloatArray = field(init=False)

    def __post_init__(self) -> None:
        self.cumulative_hazard = cumulative_trapezoid(
            self.params.hazard(self.occupancy), self.times, initial=0.0
        )

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def terminal_hazard(self) -> float:
        return float(self.params.hazard(self.occupancy[-1]))


def occupancy_ode(
    params: ChainParams,
    horizon: float | None = None,
    *,
    x0: float = 1.0,
    points: int = _GRID_POINTS,
    method: Literal["DOP853", "rk4"] = "DOP853",
    dt: float | None = None,
) -> ChainPath:
    """Solve ẋ = −h(x)x + r(x)(1 − x) from x₀.

    The default ``DOP853`` method is adaptive eighth-order Runge–Kutta.
    Without a horizon the solve runs until the integrated hazard reaches
    50, so the survival beyond is negligible, and the path is sampled on a
    geometric grid, which resolves the early fast phase and the slow tail.

    ``method="rk4"`` is classical RK4 with fixed step ``dt`` (default
    horizon/points) on the uniform grid up to ``horizon``, which it requires.
    """
    if not 0.0 <= x0 <= 1.0:
        raise ValueError("x0 must lie in [0, 1]")
    if method == "rk4":
        return _occupancy_rk4(params, horizon, x0, dt, points)
    if method != "DOP853":
        raise ValueError(f"Unknown occupancy ODE method {method!r}")

    def rhs(_t: float, y: FloatArray) -> FloatArray:
        x = min(max(y[0], 0.0), 1.0)
        return np.array([float(params.velocity(x)), float(params.hazard(x))])

    fast = float(np.exp((params.alpha - min(params.a01, params.a10)) / params.sigma_sq))
    events = None
    end = horizon
    if end is None:
        def exhausted(_t: float, y: FloatArray) -> float:
            return y[1] - _HAZARD_TARGET

        exhausted.terminal = True  # type: ignore[attr-defined]
        events = exhausted
        slowest = float(params.hazard(0.0))
        end = 10.0 * _HAZARD_TARGET / slowest
    solution = solve_ivp(
        rhs,
        (0.0, end),
        np.array([x0, 0.0]),
        method="DOP853",
        rtol=1e-10,
        atol=1e-13,
        dense_output=True,
        events=events,
        first_step=min(1e-3 / fast, end / 10.0),
    )
    if not solution.success:
        raise RuntimeError(f"Occupancy ODE failed: {solution.message}")
    stop = float(solution.t[-1])
    start = min(1e-4 / fast, stop / points)
    times = np.concatenate([[0.0], np.geomspace(start, stop, points)])
    occupancy = np.clip(solution.sol(times)[0], 0.0, 1.0)
    logger.debug(f"Occupancy ODE solved to t={stop:.4g} (sigma^2={params.sigma_sq})")
    return ChainPath(params=params, times=times, occupancy=occupancy)


def _occupancy_rk4(
    params: ChainParams, horizon: float | None, x0: float, dt: float | None, points: int
) -> ChainPath:
    if horizon is None or horizon <= 0:
        raise ValueError("The rk4 occupancy solve needs a positive horizon")

    def velocity(z: FloatArray) -> FloatArray:
        return np.atleast_1d(params.velocity(np.clip(z, 0.0, 1.0)))

    flow = integrate_rk4(velocity, [x0], horizon, dt if dt is not None else horizon / points)
    occupancy = np.clip(flow.states[:, 0], 0.0, 1.0)
    logger.debug(f"Occupancy ODE stepped to t={horizon:.4g} with RK4 (sigma^2={params.sigma_sq})")
    return ChainPath(params=params, times=flow.times, occupancy=occupancy)


def exit_survival(params: ChainParams, t: float | ArrayLike, path: ChainPath | None = None) -> FloatArray:
    """P(τ > t) = exp(−∫₀ᵗ h(x_s) ds) with the trapezoid rule on the path grid.

    Raises:
        ValueError: If the path does not reach t.
    """
    path = path if path is not None else occupancy_ode(params)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr > path.horizon * (1.0 + 1e-12)) or np.any(t_arr < 0):
        raise ValueError(f"Survival requested outside the path horizon [0, {path.horizon:.4g}]")
    hazard_integral = np.interp(t_arr, path.times, path.cumulative_hazard)
    return np.exp(-hazard_integral)


def sample_exit_times(
    params: ChainParams,
    n: int,
    rng: np.random.Generator | None = None,
    *,
    seed: int = 0,
    path: ChainPath | None = None,
) -> FloatArray:
    """Exit times by inverting the integrated hazard at Exp(1) draws.

    Draws beyond the path horizon continue with the terminal hazard.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = rng if rng is not None else stream(seed, purpose="toychain")
    path = path if path is not None else occupancy_ode(params)
    draws = rng.exponential(size=n)
    total = float(path.cumulative_hazard[-1])
    times = np.interp(draws, path.cumulative_hazard, path.times)
    beyond = draws > total
    times[beyond] = path.horizon + (draws[beyond] - total) / path.terminal_hazard
    return times


@dataclass
class SpreadResult:
    """Empirical mass of σ² log τ in windows [H − δ, H + δ] per noise level."""

    sigma_sq: list[float]
    centers: list[float]
    window: float
    masses: list[list[float]]
    outside: list[float]
    scaled_samples: list[FloatArray]

    def mass(self, sigma_sq: float, center: float) -> float:
        i = next(k for k, s in enumerate(self.sigma_sq) if math.isclose(s, sigma_sq))
        j = next(k for k, c in enumerate(self.centers) if math.isclose(c, center))
        return self.masses[i][j]

    def histogram(self, bins: int = 40) -> tuple[FloatArray, list[FloatArray]]:
        """Shared bin edges and per-σ² densities of σ² log τ."""
        pooled = np.concatenate(self.scaled_samples)
        edges = np.histogram_bin_edges(pooled, bins=bins)
        return edges, [np.histogram(s, bins=edges, density=True)[0] for s in self.scaled_samples]

    def to_dict(self) -> dict[str, Any]:
        return {
            "sigma_sq": self.sigma_sq,
            "centers": self.centers,
            "window": self.window,
            "masses": self.masses,
            "outside": self.outside,
        }


def exponent_spread(
    params: ChainParams,
    sigma_sq: Sequence[float],
    n: int,
    rng: np.random.Generator | None = None,
    *,
    seed: int = 0,
    window: float = DEFAULT_SPREAD_WINDOW,
    centers: Sequence[float] | None = None,
) -> SpreadResult:
    """Mass of σ² log τ near each candidate exponent H along a σ² grid.

    ``centers`` default to a − α ... a in steps of δ (a = a01). ``outside``
    is the mass beyond [a − α − δ, a + δ].
    """
    if not params.symmetric:
        logger.warning("Exponent spread is analysed for symmetric chains; a01 != a10 here")
    a = params.a01
    if centers is None:
        count = max(1, round(params.alpha / window)) + 1
        centers = np.linspace(a - params.alpha, a, count).tolist()
    centers = [float(c) for c in centers]
    masses, outside, scaled = [], [], []
    for i, level in enumerate(sigma_sq):
        local = params.with_sigma_sq(level)
        sub_rng = rng if rng is not None else stream(seed, i, purpose="toychain")
        values = level * np.log(sample_exit_times(local, n, sub_rng))
        scaled.append(values)
        masses.append([float(np.mean(np.abs(values - c) <= window)) for c in centers])
        low, high = a - params.alpha - window, a + window
        outside.append(float(np.mean((values < low) | (values > high))))
        logger.info(f"sigma^2={level:g}: outside mass {outside[-1]:.3f}")
    return SpreadResult(
        sigma_sq=[float(s) for s in sigma_sq],
        centers=centers,
        window=window,
        masses=masses,
        outside=outside,
        scaled_samples=scaled,
    )

"""Self-consistent rest point λ with a(λ) + b(λ, δ_λ) = 0.

λ is the fixed point of Π, where Π(v) is the unique zero of
z ↦ a(z) + b(z, δ_v). Π(v) is found by damped Newton; when Newton stalls
the frozen flow is run toward its attractor and Newton restarts from there.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.config.defaults import (
    DEFAULT_DIVERGENCE_RADIUS,
    DEFAULT_LAMBDA_MAX_ITERATIONS,
    DEFAULT_LAMBDA_TOLERANCE,
    DEFAULT_PI_TOLERANCE,
)
from sidlab.errors import ConvergenceError, DivergenceError
from sidlab.model.config import ModelConfig

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


@dataclass
class FixedPointResult:
    """Outcome of the Π iteration."""

    lam: FloatArray
    residual: float
    iterations: int
    gaps: list[float] = field(default_factory=list)

    @property
    def contraction_ratio(self) -> float:
        """Largest ratio of successive gaps above round-off."""
        ratios = [
            later / earlier
            for earlier, later in zip(self.gaps, self.gaps[1:])
            if earlier > 1e-9 and later > 1e-12
        ]
        return max(ratios) if ratios else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lam.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "contraction_ratio": self.contraction_ratio,
            "gaps": self.gaps,
        }


def _newton(
    residual: Callable[[FloatArray], FloatArray],
    jacobian: Callable[[FloatArray], FloatArray],
    z0: FloatArray,
    tol: float,
    max_iterations: int = 100,
) -> tuple[FloatArray, float]:
    z = z0.copy()
    r = residual(z)
    norm = float(np.linalg.norm(r))
    for _ in range(max_iterations):
        if norm <= tol:
            break
        jac = jacobian(z)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        damping = 1.0
        while damping > 1e-10:
            candidate = z + damping * step
            r_new = residual(candidate)
            new_norm = float(np.linalg.norm(r_new))
            if np.isfinite(new_norm) and new_norm <= (1.0 - 1e-4 * damping) * norm:
                break
            damping *= 0.5
        else:
            break
        z, r, norm = candidate, r_new, new_norm
    return z, norm


def _relax(residual: Callable[[FloatArray], FloatArray], z0: FloatArray) -> FloatArray:
    """Run ż = residual(z) toward its attracting zero."""
    from sidlab.engine.flow import integrate_rk4

    scale = max(1.0, float(np.linalg.norm(residual(z0))))
    path = integrate_rk4(residual, z0, horizon=50.0, dt=min(1e-2, 0.1 / scale))
    return path.final


def _solve_zero(
    residual: Callable[[FloatArray], FloatArray],
    jacobian: Callable[[FloatArray], FloatArray],
    start: FloatArray,
    tol: float,
    what: str,
) -> FloatArray:
    z, norm = _newton(residual, jacobian, start, tol)
    if norm <= tol:
        return z
    logger.debug(f"Newton stalled for {what} at residual {norm:.3e}; relaxing along the flow")
    z_flow, norm_flow = _newton(residual, jacobian, _relax(residual, z), tol)
    if norm_flow <= tol:
        return z_flow
    best, best_norm = (z, norm) if norm <= norm_flow else (z_flow, norm_flow)
    raise ConvergenceError(f"No zero found for {what}", best=best, residual=best_norm)


def drift_rest_point(config: ModelConfig, start: ArrayLike | None = None,
                     tol: float = DEFAULT_PI_TOLERANCE) -> FloatArray:
    """Zero of the confinement drift a alone."""
    z0 = np.zeros(config.dim) if start is None else np.asarray(start, dtype=float)
    return _solve_zero(
        config.drift.evaluate, config.drift.jacobian, z0, tol, "the confinement drift"
    )


def pi_map(
    config: ModelConfig,
    v: ArrayLike,
    tol: float = DEFAULT_PI_TOLERANCE,
    start: ArrayLike | None = None,
) -> FloatArray:
    """Π(v): the unique z with a(z) + b(z, δ_v) = 0.

    Raises:
        ConvergenceError: With the best iterate and residual when no zero is found.
    """
    v = np.asarray(v, dtype=float)
    z0 = v.copy() if start is None else np.asarray(start, dtype=float)
    return _solve_zero(
        lambda z: config.frozen_drift(v, z),
        lambda z: config.frozen_jacobian(v, z),
        z0,
        tol,
        f"Pi({np.array2string(v, precision=4)})",
    )


def fixed_point_residual(config: ModelConfig, lam: ArrayLike) -> float:
    """|a(λ) + b(λ, δ_λ)|."""
    lam = np.asarray(lam, dtype=float)
    return float(np.linalg.norm(config.frozen_drift(lam, lam)))


def find_lambda(
    config: ModelConfig,
    tol: float = DEFAULT_LAMBDA_TOLERANCE,
    *,
    start: ArrayLike | None = None,
    max_iterations: int = DEFAULT_LAMBDA_MAX_ITERATIONS,
    divergence_radius: float = DEFAULT_DIVERGENCE_RADIUS,
) -> FixedPointResult:
    """Iterate v ← Π(v) from the rest point of a until successive gaps drop below ``tol``.

    Raises:
        DivergenceError: If an iterate leaves the ball of ``divergence_radius``.
        ConvergenceError: If the iteration cap is reached.
    """
    v = drift_rest_point(config) if start is None else np.asarray(start, dtype=float)
    gaps: list[float] = []
    for iteration in range(1, max_iterations + 1):
        v_next = pi_map(config, v, start=v)
        gap = float(np.linalg.norm(v_next - v))
        gaps.append(gap)
        v = v_next
        if not np.all(np.isfinite(v)) or np.linalg.norm(v) > divergence_radius:
            raise DivergenceError(
                f"Fixed-point iterate left the ball of radius {divergence_radius:g} "
                f"at iteration {iteration}"
            )
        if gap <= tol:
            residual = fixed_point_residual(config, v)
            logger.info(f"Fixed point found after {iteration} iterations (residual {residual:.2e})")
            return FixedPointResult(lam=v, residual=residual, iterations=iteration, gaps=gaps)

    raise ConvergenceError(
        f"Fixed-point iteration did not converge in {max_iterations} iterations",
        best=v,
        residual=fixed_point_residual(config, v),
    )

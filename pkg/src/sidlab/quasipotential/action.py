"""Discrete Freidlin–Wentzell actions of the frozen dynamics.

The action of a path φ on [0, T] is ¼∫|M⁺(φ̇ − F(φ))|² dt with
F(z) = a(z) + b(z, δ_λ). Paths whose velocity defect leaves the range of M
have infinite action.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid
from scipy.optimize import minimize

from sidlab.config.defaults import DEFAULT_ACTION_NODES
from sidlab.exits.domains import Domain
from sidlab.model.config import ModelConfig
from sidlab.quasipotential.closed_form import sphere_directions

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
VectorField = Callable[[FloatArray], FloatArray]

_RANGE_TOLERANCE = 1e-8
_HORIZON_COUNT = 8


@dataclass(frozen=True, eq=False)
class DiscretePath:
    """States φ on a strictly increasing time grid; ``states`` has shape (T, d)."""

    times: FloatArray
    states: FloatArray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if times.ndim != 1 or times.size < 2:
            raise ValueError("A path needs at least two time points")
        if np.any(np.diff(times) <= 0):
            raise ValueError("Path times must be strictly increasing")
        if states.shape[0] != times.size:
            raise ValueError("Path states and times have different lengths")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @classmethod
    def straight(cls, start: ArrayLike, end: ArrayLike, horizon: float, nodes: int) -> DiscretePath:
        times = np.linspace(0.0, horizon, nodes + 1)
        start, end = np.asarray(start, dtype=float), np.asarray(end, dtype=float)
        return cls(times, start + (times / horizon)[:, None] * (end - start))

    @property
    def velocity(self) -> FloatArray:
        return np.gradient(self.states, self.times, axis=0, edge_order=2)

    @property
    def acceleration(self) -> FloatArray:
        return np.gradient(self.velocity, self.times, axis=0, edge_order=2)


def _diffusion_matrix(diffusion: Any) -> FloatArray:
    return np.atleast_2d(np.asarray(getattr(diffusion, "matrix", diffusion), dtype=float))


def action_of_path(path: DiscretePath, drift: VectorField, diffusion: Any) -> float:
    """¼∫|M⁺(φ̇ − F(φ))|² dt by the composite trapezoid rule.

    Returns ``inf`` when the required control is not in the range of M.
    """
    matrix = _diffusion_matrix(diffusion)
    pinv = np.linalg.pinv(matrix)
    defect = path.velocity - drift(path.states)
    control = defect @ pinv.T
    leftover = defect - control @ matrix.T
    scale = _RANGE_TOLERANCE * (1.0 + np.linalg.norm(defect, axis=1))
    if np.any(np.linalg.norm(leftover, axis=1) > scale):
        return math.inf
    return float(0.25 * trapezoid(np.sum(control**2, axis=1), path.times))


def kinetic_action(path: DiscretePath, force: VectorField, friction: float) -> float:
    """¼∫|φ̈ + γφ̇ + c(φ)|² dt for a position path φ."""
    residual = path.acceleration + friction * path.velocity + force(path.states)
    return float(0.25 * trapezoid(np.sum(residual**2, axis=1), path.times))


@dataclass
class ActionResult:
    """Best discrete action found for a target, with its path."""

    value: float
    path: DiscretePath
    horizon: float
    converged: bool
    values_by_horizon: dict[float, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "horizon": self.horizon,
            "converged": self.converged,
            "values_by_horizon": {str(k): v for k, v in self.values_by_horizon.items()},
        }


def _action_weights(matrix: FloatArray, penalty: float) -> FloatArray:
    """Q with ¼|M⁺r|² + penalty·|(I − MM⁺)r|² = rᵀQr."""
    pinv = np.linalg.pinv(matrix)
    projector = np.eye(matrix.shape[0]) - matrix @ pinv
    return 0.25 * pinv.T @ pinv + penalty * projector.T @ projector


def _discrete_action(
    interior: FloatArray,
    start: FloatArray,
    end: FloatArray,
    h: float,
    weights: FloatArray,
    field: VectorField,
    jacobian: Callable[[FloatArray], FloatArray],
) -> tuple[float, FloatArray]:
    d = start.size
    nodes = np.vstack([start, interior.reshape(-1, d), end])
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    residual = (nodes[1:] - nodes[:-1]) / h - field(mids)
    weighted = residual @ weights
    value = h * float(np.sum(weighted * residual))

    g = 2.0 * h * weighted
    jac = jacobian(mids)
    transported = 0.5 * np.einsum("kij,ki->kj", jac, g)
    grad = np.zeros_like(nodes)
    grad[1:] += g / h - transported
    grad[:-1] += -g / h - transported
    return value, grad[1:-1].ravel()


def _contraction_scale(config: ModelConfig, lam: FloatArray) -> float:
    if config.declared_rho is not None:
        return config.declared_rho
    jac = config.frozen_jacobian(lam, lam)
    rate = -float(np.linalg.eigvalsh(0.5 * (jac + jac.T)).max())
    return rate if rate > 1e-6 else 1.0


def horizon_grid(rho: float, count: int = _HORIZON_COUNT) -> FloatArray:
    """Logarithmic horizons between 0.5/ρ and 20/ρ."""
    return np.geomspace(0.5 / rho, 20.0 / rho, count)


def minimize_action(
    config: ModelConfig,
    lam: ArrayLike,
    target: ArrayLike,
    *,
    horizons: Sequence[float] | None = None,
    nodes: int = DEFAULT_ACTION_NODES,
    penalty: float = 1e6,
    max_iterations: int = 5000,
) -> ActionResult:
    """Minimize the midpoint-rule action from λ to ``target`` over paths and horizons.

    For each horizon T the interior nodes of a path with fixed ends are
    optimized with L-BFGS-B from the straight line; the best value over the
    horizon grid is an upper bound of the quasi-potential at the target.
    Controls outside the range of M are penalized with weight ``penalty``.
    """
    lam = np.asarray(lam, dtype=float)
    target = np.asarray(target, dtype=float)
    weights = _action_weights(config.diffusion.matrix, penalty)
    grid = horizon_grid(_contraction_scale(config, lam)) if horizons is None else np.asarray(horizons)

    def field(z: FloatArray) -> FloatArray:
        return config.frozen_drift(lam, z)

    def jacobian(z: FloatArray) -> FloatArray:
        return config.frozen_jacobian(lam, z)

    best: ActionResult | None = None
    values: dict[float, float] = {}
    for horizon in grid:
        h = float(horizon) / nodes
        initial = DiscretePath.straight(lam, target, float(horizon), nodes)
        result = minimize(
            _discrete_action,
            initial.states[1:-1].ravel(),
            args=(lam, target, h, weights, field, jacobian),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": max_iterations, "ftol": 1e-15, "gtol": 1e-10},
        )
        value = float(result.fun)
        values[float(horizon)] = value
        logger.debug(f"T={horizon:.4g}: action {value:.6g} ({result.nit} iterations)")
        if best is None or value < best.value:
            states = np.vstack([lam, result.x.reshape(-1, lam.size), target])
            best = ActionResult(
                value=value,
                path=DiscretePath(initial.times, states),
                horizon=float(horizon),
                converged=bool(result.success),
                values_by_horizon=values,
            )
    assert best is not None
    if not best.converged:
        logger.warning(f"Action minimization did not converge at T={best.horizon:.4g}")
    return best


def boundary_targets(domain: Domain, dim: int, count: int) -> FloatArray:
    """Up to ``count`` boundary points of D, padded with zeros to full dimension."""
    if domain.kind == "halfspaces":
        assert domain.normals is not None and domain.offsets is not None
        start, _ = domain.chebyshev_ball()
        offsets = domain.offsets + domain.xi
        points = np.array([start + (b - n @ start) * n for n, b in zip(domain.normals, offsets)])
    else:
        assert domain.center is not None
        directions = sphere_directions(domain.center.size, count)
        points = domain.center + domain.effective_radius * directions
    points = points[:count]
    if dim > points.shape[1]:
        points = np.hstack([points, np.zeros((points.shape[0], dim - points.shape[1]))])
    return points


def exit_action(
    config: ModelConfig,
    lam: ArrayLike,
    domain: Domain,
    *,
    targets: int = 8,
    nodes: int = DEFAULT_ACTION_NODES,
) -> ActionResult:
    """Smallest minimized action over a set of boundary targets."""
    lam = np.asarray(lam, dtype=float)
    best: ActionResult | None = None
    for target in boundary_targets(domain, config.dim, targets):
        result = minimize_action(config, lam, target, nodes=nodes)
        if best is None or result.value < best.value:
            best = result
    assert best is not None
    return best

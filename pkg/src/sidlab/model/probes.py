"""Empirical checks of the structural assumptions on a model.

All probes sample states in a ball and random one- or two-atom measures,
evaluate the drift on the change-of-variable-wrapped dynamics and report
what they saw instead of raising.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.config.defaults import DEFAULT_PROBE_RADIUS, DEFAULT_PROBE_SAMPLES, DEFAULT_RHO_GRID
from sidlab.errors import ConvergenceError, DivergenceError
from sidlab.measure.empirical import EmpiricalMeasure
from sidlab.model.config import ModelConfig
from sidlab.model.diffusion import DiffusionMatrix
from sidlab.model.drift import DriftField, GeneralizedLangevinDrift
from sidlab.utils.rng import stream

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

_SPHERE_RADII = (0.25, 0.5, 1.0)


@dataclass
class DissipativityReport:
    """Best contraction constants seen on a sample.

    Attributes:
        rho: Estimated ρ̂.
        kappa: Estimated κ̂ (smallest κ compatible with ρ̂ on the sample).
        feasible: Whether ρ̂ > κ̂.
        violations: Sampled pairs violating the inequality at the reported
            constants (or at the declared ones when the model declares them).
        rho_self: Largest ρ compatible with the equal-measure pairs alone.
        samples: Number of evaluated pairs.
    """

    rho: float
    kappa: float
    feasible: bool
    violations: int
    rho_self: float
    samples: int

    @property
    def gap(self) -> float:
        return self.rho - self.kappa

    def to_dict(self) -> dict[str, Any]:
        return {
            "rho": self.rho,
            "kappa": self.kappa,
            "feasible": self.feasible,
            "violations": self.violations,
            "rho_self": self.rho_self,
            "samples": self.samples,
        }


@dataclass
class FluctuationDissipationReport:
    applicable: bool
    residual: float = 0.0
    satisfied: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {"applicable": self.applicable, "residual": self.residual, "satisfied": self.satisfied}


def _ball(rng: np.random.Generator, n: int, d: int, center: FloatArray, radius: float) -> FloatArray:
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return center + (radius * rng.random(n) ** (1.0 / d))[:, None] * directions


def _small_measure(
    rng: np.random.Generator, d: int, center: FloatArray, radius: float
) -> EmpiricalMeasure:
    if rng.random() < 0.5:
        return EmpiricalMeasure.dirac(_ball(rng, 1, d, center, radius)[0])
    w = rng.uniform(0.05, 0.95)
    return EmpiricalMeasure(_ball(rng, 2, d, center, radius), np.array([w, 1.0 - w]))


def _w2_sq_atoms(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Exact squared W₂ between measures with at most two atoms each."""
    cost = np.sum((mu.positions[:, None, :] - nu.positions[None, :, :]) ** 2, axis=-1)
    if mu.size == 1 or nu.size == 1:
        plan = np.outer(mu.weights, nu.weights)
        return float(np.sum(plan * cost))
    # The 2×2 transport polytope is a segment; the linear cost is optimal at an end.
    a, b = mu.weights[0], nu.weights[0]
    best = np.inf
    for p in (max(0.0, a + b - 1.0), min(a, b)):
        plan = np.array([[p, a - p], [b - p, 1.0 - a - b + p]])
        best = min(best, float(np.sum(plan * cost)))
    return best


def _wrapped_total(config: ModelConfig, z: FloatArray, measure: EmpiricalMeasure) -> FloatArray:
    """D⁻¹ [a(Dz) + b(Dz, D#μ)] for a single state."""
    d_mat = config.drift.change_of_variable
    if d_mat is None:
        return config.drift.evaluate(z) + config.interaction.evaluate(z, measure)
    x = d_mat @ z
    total = config.drift.evaluate(x) + config.interaction.evaluate(x, measure.push_forward(d_mat))
    return np.linalg.solve(d_mat, total)


def _reference_point(config: ModelConfig) -> FloatArray:
    """Wrapped coordinates of λ, or the origin when λ cannot be found."""
    from sidlab.fixedpoint import find_lambda

    try:
        lam = find_lambda(config).lam
    except (ConvergenceError, DivergenceError) as e:
        logger.warning(f"No self-consistent rest point for the probe center ({e}); using the origin")
        return np.zeros(config.dim)
    d_mat = config.drift.change_of_variable
    return lam if d_mat is None else np.linalg.solve(d_mat, lam)


def _sphere_points(center: FloatArray, radius: float, rng: np.random.Generator) -> FloatArray:
    d = center.size
    axes = np.vstack([np.eye(d), -np.eye(d)])
    extra = rng.standard_normal((4 * d, d))
    directions = np.vstack([axes, extra / np.linalg.norm(extra, axis=1, keepdims=True)])
    return np.vstack([center + r * radius * directions for r in _SPHERE_RADII])


def _pair_statistics(
    config: ModelConfig,
    sample_count: int,
    radius: float,
    rng: np.random.Generator,
    center: FloatArray,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Arrays of L = ⟨z−y, F(z,μ)−F(y,ν)⟩, D = |z−y|² and W = W₂²(μ,ν)."""
    d = config.dim
    inner, dist, wass = [], [], []

    def record(z: FloatArray, y: FloatArray, mu: EmpiricalMeasure, nu: EmpiricalMeasure, w: float) -> None:
        diff = z - y
        inner.append(float(diff @ (_wrapped_total(config, z, mu) - _wrapped_total(config, y, nu))))
        dist.append(float(diff @ diff))
        wass.append(w)

    zs = _ball(rng, sample_count, d, center, radius)
    ys = _ball(rng, sample_count, d, center, radius)
    for k in range(sample_count):
        mu = _small_measure(rng, d, center, radius)
        if k % 2 == 0:
            record(zs[k], ys[k], mu, mu, 0.0)
        else:
            nu = _small_measure(rng, d, center, radius)
            record(zs[k], ys[k], mu, nu, _w2_sq_atoms(mu, nu))

    anchor = EmpiricalMeasure.dirac(center)
    for z in _sphere_points(center, radius, rng):
        record(z, center, anchor, anchor, 0.0)
    return np.array(inner), np.array(dist), np.array(wass)


def _count_violations(
    inner: FloatArray, dist: FloatArray, wass: FloatArray, rho: float, kappa: float
) -> int:
    bound = -rho * dist + kappa * wass
    return int(np.sum(inner > bound + 1e-10 * (np.abs(bound) + dist + wass) + 1e-14))


def probe_dissipativity(
    config: ModelConfig,
    sample_count: int = DEFAULT_PROBE_SAMPLES,
    radius: float = DEFAULT_PROBE_RADIUS,
    rng: np.random.Generator | None = None,
    *,
    seed: int = 0,
    center: ArrayLike | None = None,
    rho_grid: int = DEFAULT_RHO_GRID,
) -> DissipativityReport:
    """Estimate (ρ̂, κ̂) with ⟨z−y, F(z,μ)−F(y,ν)⟩ ≤ −ρ|z−y|² + κ W₂²(μ,ν).

    Half of the sampled pairs share their measure and bound ρ alone; the
    others give κ(ρ) as the smallest admissible κ for each ρ on a grid.
    The reported pair maximizes ρ − κ(ρ), preferring the larger ρ on ties.
    States are drawn in ``ball(center, radius)`` of the wrapped coordinates,
    centred at the wrapped λ unless ``center`` is given, plus a sphere grid
    around the center.
    """
    if sample_count < 100:
        raise ValueError("sample_count must be at least 100")
    rng = rng if rng is not None else stream(seed, purpose="probe")
    center_arr = _reference_point(config) if center is None else np.asarray(center, dtype=float)

    inner, dist, wass = _pair_statistics(config, sample_count, radius, rng, center_arr)
    samples = inner.size
    moving = dist > 1e-14
    same = moving & (wass <= 0.0)
    mixed = wass > 0.0

    rho_self = float(np.min(-inner[same] / dist[same])) if np.any(same) else np.inf
    if not np.isfinite(rho_self):
        rho_self = float(np.max(-inner[moving] / dist[moving]))

    if rho_self <= 0.0:
        rho_hat, kappa_hat = rho_self, 0.0
        if np.any(mixed):
            kappa_hat = max(0.0, float(np.max((inner[mixed] + rho_hat * dist[mixed]) / wass[mixed])))
    else:
        rhos = np.linspace(0.0, rho_self, rho_grid)
        if np.any(mixed):
            ratios = (inner[mixed][None, :] + rhos[:, None] * dist[mixed][None, :]) / wass[mixed][None, :]
            kappas = np.maximum(0.0, ratios.max(axis=1))
        else:
            kappas = np.zeros_like(rhos)
        gaps = rhos - kappas
        best = int(np.flatnonzero(gaps >= gaps.max() - 1e-12)[-1])
        rho_hat, kappa_hat = float(rhos[best]), float(kappas[best])

    feasible = rho_hat > kappa_hat
    if config.declared_rho is not None and config.declared_kappa is not None:
        violations = _count_violations(inner, dist, wass, config.declared_rho, config.declared_kappa)
    elif feasible:
        violations = _count_violations(inner, dist, wass, rho_hat, kappa_hat)
    else:
        violations = _count_violations(
            inner, dist, wass, max(rho_hat, 0.0), max(0.0, max(rho_hat, 0.0) - 1e-9)
        )

    report = DissipativityReport(
        rho=rho_hat,
        kappa=kappa_hat,
        feasible=feasible,
        violations=violations,
        rho_self=rho_self,
        samples=samples,
    )
    if not feasible:
        logger.warning(
            f"No contracting pair found on {samples} samples "
            f"(best rho={rho_hat:.4g}, kappa={kappa_hat:.4g})"
        )
    elif violations:
        logger.warning(f"{violations} sampled pairs violate the declared constants")
    else:
        logger.info(f"Dissipativity probe: rho={rho_hat:.4g}, kappa={kappa_hat:.4g}")
    return report


def probe_lipschitz(
    config: ModelConfig,
    sample_count: int = DEFAULT_PROBE_SAMPLES,
    radius: float = DEFAULT_PROBE_RADIUS,
    rng: np.random.Generator | None = None,
    *,
    seed: int = 0,
) -> tuple[float, float]:
    """Empirical Lipschitz constants (κ₁ in z, κ₂ in W₂) of b on the sample."""
    rng = rng if rng is not None else stream(seed, 1, purpose="probe")
    d = config.dim
    origin = np.zeros(d)
    kappa_z = kappa_w = 0.0
    b = config.interaction
    for _ in range(sample_count):
        z, y = _ball(rng, 2, d, origin, radius)
        mu = _small_measure(rng, d, origin, radius)
        nu = _small_measure(rng, d, origin, radius)
        dz = float(np.linalg.norm(z - y))
        if dz > 1e-12:
            kappa_z = max(kappa_z, float(np.linalg.norm(b.evaluate(z, mu) - b.evaluate(y, mu))) / dz)
        w = np.sqrt(_w2_sq_atoms(mu, nu))
        if w > 1e-12:
            kappa_w = max(kappa_w, float(np.linalg.norm(b.evaluate(z, mu) - b.evaluate(z, nu))) / w)
    return kappa_z, kappa_w


def check_fluctuation_dissipation(
    drift: DriftField, diffusion: DiffusionMatrix, tol: float = 1e-8
) -> FluctuationDissipationReport:
    """Compare ΣΣᵀ with γ(B + Bᵀ) on the (y, w) block of a generalized Langevin model."""
    if not isinstance(drift, GeneralizedLangevinDrift):
        return FluctuationDissipationReport(applicable=False)
    n = drift.potential.dim
    sigma_block = diffusion.matrix[n:, n:]
    blocks = drift.memory_blocks
    residual = float(
        np.linalg.norm(sigma_block @ sigma_block.T - drift.friction * (blocks + blocks.T))
    )
    return FluctuationDissipationReport(applicable=True, residual=residual, satisfied=residual <= tol)

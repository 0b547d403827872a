"""Closed-form exit costs for gradient and kinetic equilibrium models."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize
from scipy.stats import norm, qmc

from sidlab.config.defaults import DEFAULT_BOUNDARY_SAMPLES
from sidlab.errors import DomainError, InwardFlowError, NotGradientError
from sidlab.exits.domains import Domain
from sidlab.model.config import ModelConfig
from sidlab.model.drift import CustomQuadraticDrift, KineticDrift, OverdampedDrift
from sidlab.model.potentials import Potential

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
ScalarField = Callable[[FloatArray], FloatArray]


@dataclass(frozen=True, eq=False)
class EffectivePotential:
    """U_λ with −∇U_λ(z) = a(z) + b(z, δ_λ) for a gradient frozen model."""

    config: ModelConfig
    lam: FloatArray

    def value(self, z: ArrayLike) -> FloatArray:
        z = np.asarray(z, dtype=float)
        drift = self.config.drift
        if isinstance(drift, OverdampedDrift):
            base = drift.potential.value(z)
        else:
            assert isinstance(drift, CustomQuadraticDrift)
            u = z - drift.center
            base = 0.5 * np.einsum("...i,ij,...j->...", u, drift.matrix, u)
        extra = self.config.interaction.dirac_potential(z, self.lam)
        assert extra is not None
        return base - extra

    def gradient(self, z: ArrayLike) -> FloatArray:
        return -self.config.frozen_drift(self.lam, z)


def effective_potential(config: ModelConfig, lam: ArrayLike) -> EffectivePotential:
    """U_λ = U − P where a = −∇U and b(·, δ_λ) = ∇P.

    Raises:
        NotGradientError: If the confinement or the frozen interaction is not a gradient.
    """
    lam = np.asarray(lam, dtype=float)
    drift = config.drift
    if isinstance(drift, CustomQuadraticDrift):
        if not np.allclose(drift.matrix, drift.matrix.T):
            raise NotGradientError("custom-quadratic drift with a non-symmetric matrix")
    elif not isinstance(drift, OverdampedDrift):
        raise NotGradientError(f"{drift.family} drift is not a gradient field")
    if config.interaction.dirac_potential(lam, lam) is None:
        raise NotGradientError(f"{config.interaction.family} interaction is not a gradient at δ_λ")
    return EffectivePotential(config=config, lam=lam)


def sphere_directions(dim: int, samples: int, seed: int = 0) -> FloatArray:
    """Unit vectors: the ± axes plus scrambled Sobol points mapped to the sphere."""
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    if dim == 1:
        return axes
    m = max(1, math.ceil(math.log2(max(samples, 2))))
    points = qmc.Sobol(dim, scramble=True, seed=seed).random_base2(m)
    gauss = norm.ppf(np.clip(points, 1e-12, 1.0 - 1e-12))
    gauss = gauss[np.linalg.norm(gauss, axis=1) > 1e-12]
    return np.vstack([axes, gauss / np.linalg.norm(gauss, axis=1, keepdims=True)])


def _sphere_minimum(
    potential: ScalarField, center: FloatArray, radius: float, samples: int
) -> tuple[float, FloatArray]:
    directions = sphere_directions(center.size, samples)
    points = center + radius * directions
    values = potential(points)
    best = int(np.argmin(values))
    best_value, best_point = float(values[best]), points[best]
    if center.size == 1:
        return best_value, best_point

    def on_sphere(u: FloatArray) -> FloatArray:
        return center + radius * u / max(float(np.linalg.norm(u)), 1e-300)

    refined = minimize(
        lambda u: float(potential(on_sphere(u)[None, :])[0]),
        directions[best],
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000},
    )
    if refined.fun < best_value:
        best_value, best_point = float(refined.fun), on_sphere(refined.x)
    return best_value, best_point


def _polytope_minimum(potential: ScalarField, domain: Domain) -> tuple[float, FloatArray]:
    assert domain.normals is not None and domain.offsets is not None
    start, _ = domain.chebyshev_ball()
    offsets = domain.offsets + domain.xi
    best_value, best_point = np.inf, start
    for i, normal in enumerate(domain.normals):
        guess = start + (offsets[i] - normal @ start) * normal
        constraints = [
            {"type": "eq", "fun": lambda z, i=i: domain.normals[i] @ z - offsets[i]},
            {"type": "ineq", "fun": lambda z: offsets - domain.normals @ z},
        ]
        result = minimize(
            lambda z: float(potential(z[None, :])[0]),
            guess,
            method="SLSQP",
            constraints=constraints,
            options={"ftol": 1e-12, "maxiter": 500},
        )
        if result.success and result.fun < best_value:
            best_value, best_point = float(result.fun), result.x
    if not np.isfinite(best_value):
        raise DomainError("No boundary point of the polytope could be located")
    return best_value, best_point


def boundary_minimum(
    potential: ScalarField, domain: Domain, samples: int = DEFAULT_BOUNDARY_SAMPLES
) -> tuple[float, FloatArray]:
    """(inf over ∂D of the potential, a minimizing boundary point).

    Spheres are sampled with the axes and a scrambled Sobol set, then the
    best sample is refined on the sphere. Polytopes are minimized face by
    face with SLSQP. Only the constrained coordinates of ``domain`` are
    passed to ``potential``.
    """
    if domain.kind == "halfspaces":
        return _polytope_minimum(potential, domain)
    assert domain.center is not None
    return _sphere_minimum(potential, domain.center, domain.effective_radius, samples)


def elliptic_H(
    potential: ScalarField,
    lam: ArrayLike,
    domain: Domain,
    *,
    noise_scale: float = 1.0,
    samples: int = DEFAULT_BOUNDARY_SAMPLES,
) -> float:
    """(inf_∂D U − U(λ)) / m² for dX = −∇U dt + σ m dB."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    low, _ = boundary_minimum(potential, domain, samples)
    return (low - float(potential(lam[None, :])[0])) / noise_scale**2


def elliptic_exponent(config: ModelConfig, lam: ArrayLike, domain: Domain) -> float:
    """Exit exponent H of the frozen model, τ ≈ exp(2H/σ²).

    Gradient overdamped models use :func:`elliptic_H` on U_λ; kinetic
    models with scalar momentum noise m use γ/m² times :func:`kinetic_H`.

    Raises:
        NotGradientError: When neither closed form applies.
    """
    lam = np.asarray(lam, dtype=float)
    drift = config.drift
    if isinstance(drift, KineticDrift):
        n = drift.potential.dim
        block = config.diffusion.matrix[n:, n:]
        m = block[0, 0]
        if config.interaction.family != "zero" or not np.allclose(block, m * np.eye(n)) or m == 0:
            raise NotGradientError("kinetic closed form needs zero interaction and scalar momentum noise")
        return drift.friction / m**2 * kinetic_H(drift.potential, lam[:n], domain)
    scale = config.diffusion.identity_scale
    if scale is None or scale == 0:
        raise NotGradientError("closed form needs a diffusion of the form m·I")
    if domain.kind == "product":
        raise DomainError("product domains apply to kinetic models only")
    return elliptic_H(effective_potential(config, lam).value, lam, domain, noise_scale=scale)


def kinetic_H(
    potential: Potential,
    lam_position: ArrayLike,
    domain: Domain,
    samples: int = DEFAULT_BOUNDARY_SAMPLES,
) -> float:
    """inf over ∂D′ of V − V(λ′) for the kinetic equilibrium case.

    The restoring force −c = −∇V must point into D′ on its boundary.

    Raises:
        InwardFlowError: At the first sampled boundary point where c·n ≤ 0.
    """
    lam_position = np.atleast_1d(np.asarray(lam_position, dtype=float))
    if domain.kind == "halfspaces":
        assert domain.normals is not None and domain.offsets is not None
        for i, normal in enumerate(domain.normals):
            start, _ = domain.chebyshev_ball()
            point = start + (domain.offsets[i] + domain.xi - normal @ start) * normal
            _check_flux(potential, point, normal)
    else:
        assert domain.center is not None
        for direction in sphere_directions(domain.center.size, samples):
            _check_flux(potential, domain.center + domain.effective_radius * direction, direction)
    return elliptic_H(potential.value, lam_position, domain, samples=samples)


def _check_flux(potential: Potential, point: FloatArray, normal: FloatArray) -> None:
    flux = float(potential.gradient(point) @ normal)
    if flux <= 0.0:
        raise InwardFlowError(point, flux)


def exit_cost_gap(config: ModelConfig, lam: ArrayLike, domain: Domain) -> float:
    """L − H: exit cost without the interaction minus the frozen exit cost.

    Positive when the interaction lowers the exit cost.
    """
    drift = config.drift
    if not isinstance(drift, OverdampedDrift):
        raise NotGradientError("exit cost gap needs an overdamped gradient confinement")
    scale = config.diffusion.identity_scale
    if scale is None or scale == 0:
        raise NotGradientError("exit cost gap needs a diffusion of the form m·I")
    base = elliptic_H(drift.potential.value, lam, domain, noise_scale=scale)
    gap = base - elliptic_exponent(config, lam, domain)
    logger.info(f"Exit cost without interaction {base:.4g}, gap {gap:.4g}")
    return gap

"""Interaction drift families b(z, μ).

``evaluate`` takes evaluation points of shape ``(k, d)`` (or ``(d,)``) and
an :class:`EmpiricalMeasure`; families that only depend on the mean of μ
skip pairwise work.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, ClassVar, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.errors import DimensionMismatchError
from sidlab.measure.empirical import EmpiricalMeasure

FloatArray = NDArray[np.float64]


@dataclass(frozen=True, eq=False, kw_only=True)
class InteractionField(ABC):
    """Base class for interaction drifts."""

    family: ClassVar[str]
    dim: int

    def evaluate(self, points: ArrayLike, measure: EmpiricalMeasure) -> FloatArray:
        """b(z, μ) at each row of ``points``."""
        points = np.asarray(points, dtype=float)
        single = points.ndim == 1
        batch = np.atleast_2d(points)
        if batch.shape[1] != self.dim or measure.dim != self.dim:
            raise DimensionMismatchError(
                f"{self.family} interaction expects dimension {self.dim}, "
                f"got points of {batch.shape[1]} and a measure of {measure.dim}"
            )
        out = self._evaluate(batch, measure)
        return out[0] if single else out

    def evaluate_dirac(self, points: ArrayLike, v: ArrayLike) -> FloatArray:
        """b(z, δ_v)."""
        return self.evaluate(points, EmpiricalMeasure.dirac(v))

    def jacobian_dirac(self, points: ArrayLike, v: ArrayLike) -> FloatArray:
        """∂/∂z b(z, δ_v) by central differences; shape (k, d, d)."""
        batch = np.atleast_2d(np.asarray(points, dtype=float))
        dirac = EmpiricalMeasure.dirac(v)
        jac = np.empty((batch.shape[0], self.dim, self.dim))
        for j in range(self.dim):
            h = 1e-6 * np.maximum(1.0, np.abs(batch[:, j]))
            shift = np.zeros_like(batch)
            shift[:, j] = h
            forward = self._evaluate(batch + shift, dirac)
            backward = self._evaluate(batch - shift, dirac)
            jac[:, :, j] = (forward - backward) / (2.0 * h[:, None])
        return jac

    def dirac_potential(self, points: ArrayLike, v: ArrayLike) -> FloatArray | None:
        """P with ∇P(z) = b(z, δ_v), or None when b(·, δ_v) is not a gradient."""
        return None

    @abstractmethod
    def _evaluate(self, points: FloatArray, measure: EmpiricalMeasure) -> FloatArray: ...

    def _parameters(self) -> dict[str, Any]:
        return {}

    def fingerprint(self) -> dict[str, Any]:
        return {"family": self.family, "dim": self.dim, **self._parameters()}


@dataclass(frozen=True, eq=False, kw_only=True)
class ZeroInteraction(InteractionField):
    family: ClassVar[str] = "zero"

    def _evaluate(self, points: FloatArray, measure: EmpiricalMeasure) -> FloatArray:
        return np.zeros_like(points)

    def jacobian_dirac(self, points: ArrayLike, v: ArrayLike) -> FloatArray:
        batch = np.atleast_2d(np.asarray(points, dtype=float))
        return np.zeros((batch.shape[0], self.dim, self.dim))

    def dirac_potential(self, points: ArrayLike, v: ArrayLike) -> FloatArray:
        return np.zeros(np.shape(points)[:-1])


@dataclass(frozen=True, eq=False, kw_only=True)
class QuadraticRepulsion(InteractionField):
    """b(z, μ) = 2α (z − mean μ), the gradient of z ↦ ∫ α|z − y|² μ(dy)."""

    family: ClassVar[str] = "quadratic-repulsive"
    alpha: float

    def _evaluate(self, points: FloatArray, measure: EmpiricalMeasure) -> FloatArray:
        return 2.0 * self.alpha * (points - measure.mean())

    def jacobian_dirac(self, points: ArrayLike, v: ArrayLike) -> FloatArray:
        k = np.atleast_2d(np.asarray(points, dtype=float)).shape[0]
        return np.broadcast_to(2.0 * self.alpha * np.eye(self.dim), (k, self.dim, self.dim)).copy()

    def dirac_potential(self, points: ArrayLike, v: ArrayLike) -> FloatArray:
        u = np.asarray(points, dtype=float) - np.asarray(v, dtype=float)
        return self.alpha * np.sum(u**2, axis=-1)

    def _parameters(self) -> dict[str, Any]:
        return {"alpha": self.alpha}


@dataclass(frozen=True, eq=False, kw_only=True)
class QuadraticAttraction(InteractionField):
    """b(z, μ) = α (mean μ − z)."""

    family: ClassVar[str] = "quadratic-attractive"
    alpha: float

    def _evaluate(self, points: FloatArray, measure: EmpiricalMeasure) -> FloatArray:
        return self.alpha * (measure.mean() - points)

    def jacobian_dirac(self, points: ArrayLike, v: ArrayLike) -> FloatArray:
        k = np.atleast_2d(np.asarray(points, dtype=float)).shape[0]
        return np.broadcast_to(-self.alpha * np.eye(self.dim), (k, self.dim, self.dim)).copy()

    def dirac_potential(self, points: ArrayLike, v: ArrayLike) -> FloatArray:
        u = np.asarray(points, dtype=float) - np.asarray(v, dtype=float)
        return -0.5 * self.alpha * np.sum(u**2, axis=-1)

    def _parameters(self) -> dict[str, Any]:
        return {"alpha": self.alpha}


@dataclass(frozen=True, eq=False, kw_only=True)
class ConvolutionGradient(InteractionField):
    """b(z, μ) = A ∫ ∇W̃(z − y) μ(dy).

    Profiles: ``quadratic`` W̃(u) = α|u|², ``gaussian`` W̃(u) = α e^{−β|u|²}.
    """

    family: ClassVar[str] = "convolution-gradient"
    alpha: float
    beta: float = 1.0
    profile: Literal["quadratic", "gaussian"] = "quadratic"
    output: FloatArray | None = None
    scalar_output: float | None = field(init=False, default=None)

    def __post_init__(self) -> None:
        output = np.eye(self.dim) if self.output is None else np.atleast_2d(
            np.asarray(self.output, dtype=float)
        )
        if output.shape != (self.dim, self.dim):
            raise DimensionMismatchError(f"Output matrix must be {self.dim}×{self.dim}")
        object.__setattr__(self, "output", output)
        s = output[0, 0]
        if np.allclose(output, s * np.eye(self.dim)):
            object.__setattr__(self, "scalar_output", float(s))

    def _profile_value(self, u: FloatArray) -> FloatArray:
        r2 = np.sum(u**2, axis=-1)
        if self.profile == "quadratic":
            return self.alpha * r2
        return self.alpha * np.exp(-self.beta * r2)

    def _evaluate(self, points: FloatArray, measure: EmpiricalMeasure) -> FloatArray:
        assert self.output is not None
        if self.profile == "quadratic":
            field_ = 2.0 * self.alpha * (points - measure.mean())
        else:
            diff = points[:, None, :] - measure.positions[None, :, :]
            bump = np.exp(-self.beta * np.sum(diff**2, axis=-1)) * measure.weights[None, :]
            field_ = -2.0 * self.alpha * self.beta * np.einsum("km,kmd->kd", bump, diff)
        return field_ @ self.output.T

    def jacobian_dirac(self, points: ArrayLike, v: ArrayLike) -> FloatArray:
        assert self.output is not None
        batch = np.atleast_2d(np.asarray(points, dtype=float))
        eye = np.eye(self.dim)
        if self.profile == "quadratic":
            hess = np.broadcast_to(2.0 * self.alpha * eye, (batch.shape[0], self.dim, self.dim))
        else:
            u = batch - np.asarray(v, dtype=float)
            bump = self.alpha * np.exp(-self.beta * np.sum(u**2, axis=-1))[:, None, None]
            hess = bump * (4.0 * self.beta**2 * np.einsum("ki,kj->kij", u, u) - 2.0 * self.beta * eye)
        return np.einsum("ij,kjl->kil", self.output, hess)

    def dirac_potential(self, points: ArrayLike, v: ArrayLike) -> FloatArray | None:
        if self.scalar_output is None:
            return None
        u = np.asarray(points, dtype=float) - np.asarray(v, dtype=float)
        return self.scalar_output * self._profile_value(u)

    def _parameters(self) -> dict[str, Any]:
        assert self.output is not None
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "profile": self.profile,
            "output": self.output.tolist(),
        }


@dataclass(frozen=True, eq=False, kw_only=True)
class GaussianRepulsion(ConvolutionGradient):
    """Gaussian convolution with A = −I: particles push each other apart."""

    family: ClassVar[str] = "gaussian-repulsion"
    profile: Literal["quadratic", "gaussian"] = "gaussian"

    def __post_init__(self) -> None:
        if self.output is None:
            object.__setattr__(self, "output", -np.eye(self.dim))
        super().__post_init__()


@dataclass(frozen=True, eq=False, kw_only=True)
class AbpBias(InteractionField):
    """Adaptive biasing b(z, μ) = ω A ∇ ln(ε′ + ρ_μ∘ξ)(z).

    ρ_μ is the density of ξ#μ smoothed by a Gaussian kernel of variance ε,
    for the linear reaction coordinate ξ(z) = P z.
    """

    family: ClassVar[str] = "abp-bias"
    omega: float = 1.0
    eps: float = 0.1
    eps_prime: float = 0.1
    output: FloatArray | None = None
    reaction_coordinate: FloatArray | None = None

    def __post_init__(self) -> None:
        output = np.eye(self.dim) if self.output is None else np.atleast_2d(
            np.asarray(self.output, dtype=float)
        )
        coordinate = (
            np.eye(self.dim)[:1]
            if self.reaction_coordinate is None
            else np.atleast_2d(np.asarray(self.reaction_coordinate, dtype=float))
        )
        if output.shape != (self.dim, self.dim) or coordinate.shape[1] != self.dim:
            raise DimensionMismatchError("ABP output must be d×d and reaction coordinate p×d")
        if self.eps <= 0 or self.eps_prime <= 0:
            raise ValueError("ABP smoothing parameters must be positive")
        object.__setattr__(self, "output", output)
        object.__setattr__(self, "reaction_coordinate", coordinate)

    def _density(self, points: FloatArray, measure: EmpiricalMeasure) -> tuple[FloatArray, FloatArray]:
        assert self.reaction_coordinate is not None
        p = self.reaction_coordinate.shape[0]
        xi_z = points @ self.reaction_coordinate.T
        xi_y = measure.positions @ self.reaction_coordinate.T
        diff = xi_z[:, None, :] - xi_y[None, :, :]
        norm = (2.0 * np.pi * self.eps) ** (p / 2.0)
        kern = np.exp(-np.sum(diff**2, axis=-1) / (2.0 * self.eps)) / norm * measure.weights[None, :]
        density = kern.sum(axis=1)
        grad_xi = -np.einsum("km,kmp->kp", kern, diff) / self.eps
        return density, grad_xi

    def _evaluate(self, points: FloatArray, measure: EmpiricalMeasure) -> FloatArray:
        assert self.output is not None and self.reaction_coordinate is not None
        density, grad_xi = self._density(points, measure)
        grad_z = (grad_xi @ self.reaction_coordinate) / (self.eps_prime + density)[:, None]
        return self.omega * grad_z @ self.output.T

    def dirac_potential(self, points: ArrayLike, v: ArrayLike) -> FloatArray | None:
        assert self.output is not None
        s = self.output[0, 0]
        if not np.allclose(self.output, s * np.eye(self.dim)):
            return None
        batch = np.atleast_2d(np.asarray(points, dtype=float))
        density, _ = self._density(batch, EmpiricalMeasure.dirac(v))
        values = self.omega * s * np.log(self.eps_prime + density)
        return values[0] if np.ndim(points) == 1 else values

    def _parameters(self) -> dict[str, Any]:
        assert self.output is not None and self.reaction_coordinate is not None
        return {
            "omega": self.omega,
            "eps": self.eps,
            "eps_prime": self.eps_prime,
            "output": self.output.tolist(),
            "reaction_coordinate": self.reaction_coordinate.tolist(),
        }


@dataclass(frozen=True, eq=False, kw_only=True)
class TwoSpecies(InteractionField):
    """Two-species coupling on z = (x, y) with linear pair forces.

    b = (∫ c₁₁(x − x′) + c₁₂(x − y′) dμ, ∫ c₂₁(y − x′) + c₂₂(y − y′) dμ).
    """

    family: ClassVar[str] = "two-species"
    coefficients: FloatArray

    def __post_init__(self) -> None:
        coefficients = np.asarray(self.coefficients, dtype=float)
        if coefficients.shape != (2, 2):
            raise DimensionMismatchError("Two-species coefficients must be 2×2")
        if self.dim % 2:
            raise DimensionMismatchError("Two-species state dimension must be even")
        object.__setattr__(self, "coefficients", coefficients)

    def _evaluate(self, points: FloatArray, measure: EmpiricalMeasure) -> FloatArray:
        n = self.dim // 2
        (c11, c12), (c21, c22) = self.coefficients
        m = measure.mean()
        x, y = points[:, :n], points[:, n:]
        bx = c11 * (x - m[:n]) + c12 * (x - m[n:])
        by = c21 * (y - m[:n]) + c22 * (y - m[n:])
        return np.concatenate([bx, by], axis=1)

    def jacobian_dirac(self, points: ArrayLike, v: ArrayLike) -> FloatArray:
        n = self.dim // 2
        k = np.atleast_2d(np.asarray(points, dtype=float)).shape[0]
        diag = np.concatenate(
            [np.full(n, self.coefficients[0].sum()), np.full(n, self.coefficients[1].sum())]
        )
        return np.broadcast_to(np.diag(diag), (k, self.dim, self.dim)).copy()

    def _parameters(self) -> dict[str, Any]:
        return {"coefficients": self.coefficients.tolist()}


INTERACTION_FAMILIES: dict[str, type[InteractionField]] = {
    cls.family: cls
    for cls in (
        ZeroInteraction,
        ConvolutionGradient,
        QuadraticRepulsion,
        QuadraticAttraction,
        GaussianRepulsion,
        AbpBias,
        TwoSpecies,
    )
}


def evaluate_interaction(
    field_: InteractionField, z: ArrayLike, measure: EmpiricalMeasure
) -> FloatArray:
    """b(z, μ) of the declared family."""
    return field_.evaluate(z, measure)

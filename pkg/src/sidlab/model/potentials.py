"""Confining potentials.

All methods take points of shape ``(..., n)`` and broadcast over the leading
axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.errors import DimensionMismatchError

FloatArray = NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class QuadraticPotential:
    """U(x) = ½ (x − c)ᵀ H (x − c) with H symmetric positive definite."""

    hessian: FloatArray
    center: FloatArray
    kind: Literal["quadratic"] = field(default="quadratic", init=False)

    def __post_init__(self) -> None:
        hessian = np.atleast_2d(np.asarray(self.hessian, dtype=float))
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if hessian.shape != (center.size, center.size):
            raise DimensionMismatchError(
                f"Hessian shape {hessian.shape} does not match center of size {center.size}"
            )
        if not np.allclose(hessian, hessian.T):
            raise ValueError("Potential Hessian must be symmetric")
        if np.linalg.eigvalsh(hessian).min() <= 0:
            raise ValueError("Potential Hessian must be positive definite")
        object.__setattr__(self, "hessian", hessian)
        object.__setattr__(self, "center", center)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def convexity(self) -> float:
        """Smallest Hessian eigenvalue."""
        return float(np.linalg.eigvalsh(self.hessian).min())

    def value(self, x: ArrayLike) -> FloatArray:
        u = np.asarray(x, dtype=float) - self.center
        return 0.5 * np.einsum("...i,ij,...j->...", u, self.hessian, u)

    def gradient(self, x: ArrayLike) -> FloatArray:
        u = np.asarray(x, dtype=float) - self.center
        return u @ self.hessian.T

    def hessian_at(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.hessian, x.shape[:-1] + self.hessian.shape).copy()

    def fingerprint(self) -> dict[str, object]:
        return {"kind": self.kind, "hessian": self.hessian.tolist(), "center": self.center.tolist()}


@dataclass(frozen=True, eq=False)
class QuarticPotential:
    """U(x) = ρ/2 |x − c|² + q/4 |x − c|⁴, ρ-convex for q ≥ 0."""

    stiffness: float
    quartic: float
    center: FloatArray
    kind: Literal["quartic"] = field(default="quartic", init=False)

    def __post_init__(self) -> None:
        if self.stiffness <= 0 or self.quartic < 0:
            raise ValueError("Quartic potential needs stiffness > 0 and quartic >= 0")
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def convexity(self) -> float:
        return float(self.stiffness)

    def value(self, x: ArrayLike) -> FloatArray:
        r2 = np.sum((np.asarray(x, dtype=float) - self.center) ** 2, axis=-1)
        return 0.5 * self.stiffness * r2 + 0.25 * self.quartic * r2**2

    def gradient(self, x: ArrayLike) -> FloatArray:
        u = np.asarray(x, dtype=float) - self.center
        r2 = np.sum(u**2, axis=-1, keepdims=True)
        return (self.stiffness + self.quartic * r2) * u

    def hessian_at(self, x: ArrayLike) -> FloatArray:
        u = np.asarray(x, dtype=float) - self.center
        r2 = np.sum(u**2, axis=-1)[..., None, None]
        eye = np.eye(self.dim)
        return (self.stiffness + self.quartic * r2) * eye + 2.0 * self.quartic * np.einsum(
            "...i,...j->...ij", u, u
        )

    def fingerprint(self) -> dict[str, object]:
        return {
            "kind": self.kind,
            "stiffness": self.stiffness,
            "quartic": self.quartic,
            "center": self.center.tolist(),
        }


Potential = QuadraticPotential | QuarticPotential


def make_potential(
    kind: str,
    center: ArrayLike,
    *,
    stiffness: float | None = None,
    hessian: ArrayLike | None = None,
    quartic: float = 0.0,
) -> Potential:
    """Build a potential from its descriptor fields."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if kind == "quadratic":
        if hessian is None:
            hessian = (1.0 if stiffness is None else stiffness) * np.eye(center.size)
        return QuadraticPotential(hessian=np.asarray(hessian, dtype=float), center=center)
    if kind == "quartic":
        return QuarticPotential(
            stiffness=1.0 if stiffness is None else stiffness, quartic=quartic, center=center
        )
    raise ValueError(f"Unknown potential kind: {kind}")

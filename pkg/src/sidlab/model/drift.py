"""Confinement drift families a(z).

Each family is a frozen dataclass registered under its tag in
:data:`DRIFT_FAMILIES`. ``evaluate`` and ``jacobian`` accept a batch of
states of shape ``(k, d)`` (or a single state of shape ``(d,)``).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.errors import DimensionMismatchError
from sidlab.model.potentials import Potential

FloatArray = NDArray[np.float64]


def _as_matrix(value: ArrayLike | None, name: str) -> FloatArray | None:
    if value is None:
        return None
    matrix = np.atleast_2d(np.asarray(value, dtype=float))
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{name} must be finite")
    return matrix


@dataclass(frozen=True, eq=False, kw_only=True)
class DriftField(ABC):
    """Base class for confinement drifts.

    Attributes:
        change_of_variable: Optional invertible matrix D; the wrapped field
            ``D⁻¹ a(D z)`` is what dissipativity probes examine.
    """

    family: ClassVar[str]
    change_of_variable: FloatArray | None = None

    def __post_init__(self) -> None:
        matrix = _as_matrix(self.change_of_variable, "change_of_variable")
        if matrix is not None:
            if matrix.shape != (self.dim, self.dim):
                raise DimensionMismatchError(
                    f"change_of_variable has shape {matrix.shape}, expected ({self.dim}, {self.dim})"
                )
            if abs(np.linalg.det(matrix)) < 1e-12:
                raise ValueError("change_of_variable must be invertible")
        object.__setattr__(self, "change_of_variable", matrix)

    @property
    @abstractmethod
    def dim(self) -> int:
        """State dimension d."""

    @abstractmethod
    def evaluate(self, z: ArrayLike) -> FloatArray:
        """a(z) for states of shape (..., d)."""

    @abstractmethod
    def jacobian(self, z: ArrayLike) -> FloatArray:
        """∂a/∂z for states of shape (..., d); returns (..., d, d)."""

    @abstractmethod
    def _parameters(self) -> dict[str, Any]:
        """JSON-compatible family parameters."""

    def fingerprint(self) -> dict[str, Any]:
        cov = None if self.change_of_variable is None else self.change_of_variable.tolist()
        return {"family": self.family, "change_of_variable": cov, **self._parameters()}

    def wrapped(self, z: ArrayLike) -> FloatArray:
        """D⁻¹ a(D z), or a(z) when no change of variable is set."""
        z = np.asarray(z, dtype=float)
        if self.change_of_variable is None:
            return self.evaluate(z)
        d_mat = self.change_of_variable
        return self.evaluate(z @ d_mat.T) @ np.linalg.inv(d_mat).T

    def _check(self, z: ArrayLike) -> FloatArray:
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.dim:
            raise DimensionMismatchError(
                f"{self.family} drift expects dimension {self.dim}, got {z.shape[-1]}"
            )
        return z


@dataclass(frozen=True, eq=False, kw_only=True)
class OverdampedDrift(DriftField):
    """a(x) = −∇U(x)."""

    family: ClassVar[str] = "overdamped"
    potential: Potential

    @property
    def dim(self) -> int:
        return self.potential.dim

    def evaluate(self, z: ArrayLike) -> FloatArray:
        return -self.potential.gradient(self._check(z))

    def jacobian(self, z: ArrayLike) -> FloatArray:
        return -self.potential.hessian_at(self._check(z))

    def _parameters(self) -> dict[str, Any]:
        return {"potential": self.potential.fingerprint()}


@dataclass(frozen=True, eq=False, kw_only=True)
class KineticDrift(DriftField):
    """a(x, y) = (y, −∇V(x) − γ y)."""

    family: ClassVar[str] = "kinetic"
    potential: Potential
    friction: float = 1.0

    @property
    def dim(self) -> int:
        return 2 * self.potential.dim

    def evaluate(self, z: ArrayLike) -> FloatArray:
        z = self._check(z)
        n = self.potential.dim
        x, y = z[..., :n], z[..., n:]
        return np.concatenate([y, -self.potential.gradient(x) - self.friction * y], axis=-1)

    def jacobian(self, z: ArrayLike) -> FloatArray:
        z = self._check(z)
        n = self.potential.dim
        jac = np.zeros(z.shape[:-1] + (self.dim, self.dim))
        jac[..., :n, n:] = np.eye(n)
        jac[..., n:, :n] = -self.potential.hessian_at(z[..., :n])
        jac[..., n:, n:] = -self.friction * np.eye(n)
        return jac

    def _parameters(self) -> dict[str, Any]:
        return {"potential": self.potential.fingerprint(), "friction": self.friction}


@dataclass(frozen=True, eq=False, kw_only=True)
class ColoredNoiseDrift(DriftField):
    """a(x, η) = (−∇V(x) + B η, F η): an OU-driven coordinate."""

    family: ClassVar[str] = "colored-noise"
    potential: Potential
    coupling: FloatArray
    noise_drift: FloatArray

    def __post_init__(self) -> None:
        coupling = _as_matrix(self.coupling, "coupling")
        noise_drift = _as_matrix(self.noise_drift, "noise_drift")
        assert coupling is not None and noise_drift is not None
        n, p = coupling.shape
        if n != self.potential.dim or noise_drift.shape != (p, p):
            raise DimensionMismatchError("coupling must be n×p and noise_drift p×p")
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "noise_drift", noise_drift)
        super().__post_init__()

    @property
    def dim(self) -> int:
        return self.potential.dim + np.shape(self.coupling)[1]

    def evaluate(self, z: ArrayLike) -> FloatArray:
        z = self._check(z)
        n = self.potential.dim
        x, eta = z[..., :n], z[..., n:]
        return np.concatenate(
            [-self.potential.gradient(x) + eta @ self.coupling.T, eta @ self.noise_drift.T],
            axis=-1,
        )

    def jacobian(self, z: ArrayLike) -> FloatArray:
        z = self._check(z)
        n = self.potential.dim
        jac = np.zeros(z.shape[:-1] + (self.dim, self.dim))
        jac[..., :n, :n] = -self.potential.hessian_at(z[..., :n])
        jac[..., :n, n:] = self.coupling
        jac[..., n:, n:] = self.noise_drift
        return jac

    def _parameters(self) -> dict[str, Any]:
        return {
            "potential": self.potential.fingerprint(),
            "coupling": self.coupling.tolist(),
            "noise_drift": self.noise_drift.tolist(),
        }


@dataclass(frozen=True, eq=False, kw_only=True)
class GeneralizedLangevinDrift(DriftField):
    """Markovian embedding of a generalized Langevin equation.

    a(x, y, w) = (y, −∇V(x), 0) − γ (0, B (y, w)) with B acting on the
    momentum and the p auxiliary coordinates.
    """

    family: ClassVar[str] = "generalized-langevin"
    potential: Potential
    friction: float = 1.0
    memory_blocks: FloatArray

    def __post_init__(self) -> None:
        blocks = _as_matrix(self.memory_blocks, "memory_blocks")
        assert blocks is not None
        n = self.potential.dim
        if blocks.shape[0] != blocks.shape[1] or blocks.shape[0] <= n:
            raise DimensionMismatchError("memory_blocks must be square of size n + p with p >= 1")
        object.__setattr__(self, "memory_blocks", blocks)
        super().__post_init__()

    @property
    def dim(self) -> int:
        return self.potential.dim + np.shape(self.memory_blocks)[0]

    def evaluate(self, z: ArrayLike) -> FloatArray:
        z = self._check(z)
        n = self.potential.dim
        x, rest = z[..., :n], z[..., n:]
        damping = -self.friction * (rest @ self.memory_blocks.T)
        damping[..., :n] -= self.potential.gradient(x)
        return np.concatenate([z[..., n : 2 * n], damping], axis=-1)

    def jacobian(self, z: ArrayLike) -> FloatArray:
        z = self._check(z)
        n = self.potential.dim
        jac = np.zeros(z.shape[:-1] + (self.dim, self.dim))
        jac[..., :n, n : 2 * n] = np.eye(n)
        jac[..., n:, n:] = -self.friction * self.memory_blocks
        jac[..., n : 2 * n, :n] = -self.potential.hessian_at(z[..., :n])
        return jac

    def _parameters(self) -> dict[str, Any]:
        return {
            "potential": self.potential.fingerprint(),
            "friction": self.friction,
            "memory_blocks": self.memory_blocks.tolist(),
        }


@dataclass(frozen=True, eq=False, kw_only=True)
class CustomQuadraticDrift(DriftField):
    """a(z) = −K (z − c) for a user-supplied matrix K."""

    family: ClassVar[str] = "custom-quadratic"
    matrix: FloatArray
    center: FloatArray

    def __post_init__(self) -> None:
        matrix = _as_matrix(self.matrix, "matrix")
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        assert matrix is not None
        if matrix.shape != (center.size, center.size):
            raise DimensionMismatchError("custom-quadratic matrix must be d×d with center of size d")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "center", center)
        super().__post_init__()

    @property
    def dim(self) -> int:
        return self.center.size

    def evaluate(self, z: ArrayLike) -> FloatArray:
        return -(self._check(z) - self.center) @ self.matrix.T

    def jacobian(self, z: ArrayLike) -> FloatArray:
        z = self._check(z)
        return np.broadcast_to(-self.matrix, z.shape[:-1] + self.matrix.shape).copy()

    def _parameters(self) -> dict[str, Any]:
        return {"matrix": self.matrix.tolist(), "center": self.center.tolist()}


DRIFT_FAMILIES: dict[str, type[DriftField]] = {
    cls.family: cls
    for cls in (
        OverdampedDrift,
        KineticDrift,
        ColoredNoiseDrift,
        GeneralizedLangevinDrift,
        CustomQuadraticDrift,
    )
}


def evaluate_drift(field: DriftField, z: ArrayLike) -> FloatArray:
    """a(z) of the declared family.

    When the field carries a change of variable D the wrapped drift
    D⁻¹ a(D z) is returned.
    """
    return field.wrapped(z)

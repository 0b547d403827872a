"""Weighted empirical measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.errors import DimensionMismatchError, EmptyMeasureError

FloatArray = NDArray[np.float64]

WEIGHT_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Finite probability measure Σ wᵢ δ_{xᵢ}.

    Attributes:
        positions: Atom locations, shape (n, d).
        weights: Nonnegative weights summing to one, shape (n,).
    """

    positions: FloatArray
    weights: FloatArray

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=float)
        if positions.ndim == 1:
            positions = positions[:, None]
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if positions.shape[0] == 0:
            raise EmptyMeasureError("A measure needs at least one atom")
        if weights.shape[0] != positions.shape[0]:
            raise DimensionMismatchError(
                f"{positions.shape[0]} atoms but {weights.shape[0]} weights"
            )
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("Weights must be finite and nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"Weights must sum to 1 (got {weights.sum():.12g})")
        if not np.all(np.isfinite(positions)):
            raise ValueError("Atom positions must be finite")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, points: ArrayLike) -> EmpiricalMeasure:
        """Equal-weight measure on the rows of ``points``."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        n = points.shape[0]
        if n == 0:
            raise EmptyMeasureError("A measure needs at least one atom")
        return cls(points, np.full(n, 1.0 / n))

    @classmethod
    def dirac(cls, point: ArrayLike) -> EmpiricalMeasure:
        return cls(np.atleast_1d(np.asarray(point, dtype=float))[None, :], np.ones(1))

    @classmethod
    def normalized(cls, points: ArrayLike, weights: ArrayLike) -> EmpiricalMeasure:
        """Measure from unnormalized weights."""
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if total <= 0:
            raise EmptyMeasureError("Weights sum to zero")
        return cls(np.asarray(points, dtype=float), weights / total)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    def mean(self) -> FloatArray:
        return self.weights @ self.positions

    def push_forward(self, matrix: ArrayLike) -> EmpiricalMeasure:
        """Image under the linear map z ↦ matrix·z."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return EmpiricalMeasure(self.positions @ matrix.T, self.weights)

    def resample(self, n: int, rng: np.random.Generator) -> FloatArray:
        """n i.i.d. draws, returned as an (n, d) array."""
        return self.positions[rng.choice(self.size, size=n, p=self.weights)]


def second_moment_about(measure: EmpiricalMeasure, point: ArrayLike) -> float:
    """∫|z − point|² dμ, which equals W₂²(μ, δ_point)."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if point.shape[0] != measure.dim:
        raise DimensionMismatchError(
            f"Point of dimension {point.shape[0]} for a measure of dimension {measure.dim}"
        )
    return float(measure.weights @ np.sum((measure.positions - point) ** 2, axis=1))

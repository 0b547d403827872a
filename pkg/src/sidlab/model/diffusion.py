"""Diffusion matrix M of dZ = … dt + σ M dB."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray


@dataclass(frozen=True, eq=False)
class DiffusionMatrix:
    """Constant diffusion matrix with its cached operator norm ‖M‖."""

    matrix: NDArray[np.float64]
    norm: float = field(init=False)

    def __post_init__(self) -> None:
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Diffusion matrix must be square, got {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("Diffusion matrix must be finite")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "norm", float(np.linalg.norm(matrix, 2)))

    @classmethod
    def scaled_identity(cls, dim: int, scale: float = 1.0) -> DiffusionMatrix:
        return cls(scale * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def identity_scale(self) -> float | None:
        """m when M = m·I, else None."""
        m = self.matrix[0, 0]
        return float(m) if np.allclose(self.matrix, m * np.eye(self.dim)) else None

    @property
    def is_invertible(self) -> bool:
        return bool(abs(np.linalg.det(self.matrix)) > 1e-12)

    def apply(self, noise: ArrayLike) -> NDArray[np.float64]:
        """M ξ for row vectors ξ of shape (..., d)."""
        return np.asarray(noise, dtype=float) @ self.matrix.T

    def fingerprint(self) -> dict[str, Any]:
        return {"matrix": self.matrix.tolist()}

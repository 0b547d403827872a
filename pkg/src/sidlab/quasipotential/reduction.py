"""Grid check that an interaction lowers the exit cost of a gradient model."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.exits.domains import Domain
from sidlab.model.config import ModelConfig
from sidlab.model.drift import OverdampedDrift

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

ReductionStatus = Literal["certified", "boundary", "violated", "not-applicable"]


@dataclass
class ReductionReport:
    """Sign of ⟨b(z, δ_λ), b(z, δ_λ) − 4∇U(z)⟩ over a grid of D̄ minus λ.

    ``certified`` means strictly negative everywhere on the grid.
    """

    status: ReductionStatus
    checked: int = 0
    max_value: float = float("nan")
    violating: list[list[float]] = field(default_factory=list)
    boundary: list[list[float]] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.status == "certified"

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "checked": self.checked,
            "max_value": self.max_value,
            "violating": self.violating[:20],
            "boundary": self.boundary[:20],
        }


def _bounding_box(domain: Domain) -> tuple[FloatArray, FloatArray]:
    center, radius = domain.chebyshev_ball()
    if domain.kind != "halfspaces":
        return center - radius, center + radius
    if not np.isfinite(radius):
        radius = 1.0
    return center - 10.0 * radius, center + 10.0 * radius


def domain_grid(domain: Domain, resolution: int, dim: int, seed: int = 0) -> FloatArray:
    """Points of the closure of D on a Cartesian grid (random points above three dimensions)."""
    low, high = _bounding_box(domain)
    k = low.size
    if k <= 3:
        axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(low, high)]
        points = np.array(list(itertools.product(*axes)))
    else:
        rng = np.random.default_rng(seed)
        points = rng.uniform(low, high, size=(resolution**3, k))
    if dim > k:
        points = np.hstack([points, np.zeros((points.shape[0], dim - k))])
    tol = 1e-12 * max(1.0, float(np.max(np.abs(high - low))))
    return points[domain.signed_distance(points) <= tol]


def reduction_probe(
    config: ModelConfig,
    lam: ArrayLike,
    domain: Domain,
    resolution: int = 41,
    tol: float = 1e-12,
) -> ReductionReport:
    """Check ⟨b, b − 4∇U⟩ < 0 on a grid of D̄ \\ {λ} with b = b(·, δ_λ)."""
    drift = config.drift
    if not isinstance(drift, OverdampedDrift):
        logger.warning(f"Reduction probe needs a gradient confinement, got {drift.family}")
        return ReductionReport(status="not-applicable")
    lam = np.asarray(lam, dtype=float)
    points = domain_grid(domain, resolution, config.dim)
    points = points[np.linalg.norm(points - lam, axis=1) > 1e-9]

    b = config.interaction.evaluate_dirac(points, lam)
    values = np.sum(b * (b - 4.0 * drift.potential.gradient(points)), axis=1)
    scale = tol * (1.0 + np.sum(b**2, axis=1) + np.linalg.norm(b, axis=1))
    violating = values > scale
    boundary = np.abs(values) <= scale

    if np.any(violating):
        status: ReductionStatus = "violated"
    elif np.any(boundary):
        status = "boundary"
    else:
        status = "certified"
    report = ReductionReport(
        status=status,
        checked=int(points.shape[0]),
        max_value=float(values.max()) if values.size else float("nan"),
        violating=points[violating].tolist(),
        boundary=points[boundary].tolist(),
    )
    if status == "certified":
        logger.info(f"Exit-cost reduction certified on {report.checked} grid points")
    else:
        logger.info(f"No reduction certified: status {status} on {report.checked} grid points")
    return report

"""Exit domains and their nested inflations.

A domain is open; ``signed_distance`` is negative inside, zero on the
boundary and positive outside. The signed inflation ``xi`` grows the domain
when positive and shrinks it when negative.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linprog

from sidlab.errors import DimensionMismatchError, DomainError

if TYPE_CHECKING:
    from sidlab.config.settings import DomainSettings

FloatArray = NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class Domain:
    """Ball, position-ball × free momentum block, or intersection of half-spaces.

    Attributes:
        kind: ``ball``, ``product`` or ``halfspaces``.
        center: Ball center (position block only for ``product``).
        radius: Ball radius.
        normals: Rows n_i of the half-spaces {n_i·z < b_i}; normalized on creation.
        offsets: Offsets b_i.
        xi: Signed inflation.
    """

    kind: Literal["ball", "product", "halfspaces"]
    center: FloatArray | None = None
    radius: float = 1.0
    normals: FloatArray | None = None
    offsets: FloatArray | None = None
    xi: float = 0.0

    def __post_init__(self) -> None:
        if self.kind in ("ball", "product"):
            if self.center is None:
                raise ValueError(f"A {self.kind} domain needs a center")
            object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
            if self.radius <= 0:
                raise ValueError("Domain radius must be positive")
        else:
            if self.normals is None or self.offsets is None:
                raise ValueError("A halfspaces domain needs normals and offsets")
            normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
            offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
            if normals.shape[0] != offsets.size:
                raise DimensionMismatchError("One offset is needed per normal")
            lengths = np.linalg.norm(normals, axis=1)
            if np.any(lengths == 0):
                raise ValueError("Half-space normals must be nonzero")
            object.__setattr__(self, "normals", normals / lengths[:, None])
            object.__setattr__(self, "offsets", offsets / lengths)

    @property
    def effective_radius(self) -> float:
        return self.radius + self.xi

    @property
    def constrained_dims(self) -> int:
        """Number of leading coordinates the domain constrains."""
        if self.kind == "halfspaces":
            assert self.normals is not None
            return self.normals.shape[1]
        assert self.center is not None
        return self.center.size

    def signed_distance(self, z: ArrayLike) -> FloatArray:
        """Signed distance to ∂D for states of shape (..., d).

        Exact for balls and products; for polytopes the largest face
        violation, exact inside and a lower bound outside.
        """
        z = np.asarray(z, dtype=float)
        k = self.constrained_dims
        if z.shape[-1] < k or (self.kind == "ball" and z.shape[-1] != k):
            raise DimensionMismatchError(
                f"{self.kind} domain on {k} coordinates got states of dimension {z.shape[-1]}"
            )
        x = z[..., :k]
        if self.kind == "halfspaces":
            assert self.normals is not None and self.offsets is not None
            return np.max(x @ self.normals.T - self.offsets, axis=-1) - self.xi
        return np.linalg.norm(x - self.center, axis=-1) - self.effective_radius

    def contains(self, z: ArrayLike) -> NDArray[np.bool_]:
        return self.signed_distance(z) < 0.0

    def inradius(self) -> float:
        """Radius of the largest ball inside D (Chebyshev radius for polytopes)."""
        return self.chebyshev_ball()[1]

    def chebyshev_ball(self) -> tuple[FloatArray, float]:
        """Center and radius of the largest ball inside D."""
        if self.kind != "halfspaces":
            assert self.center is not None
            return self.center, self.effective_radius
        assert self.normals is not None and self.offsets is not None
        d = self.normals.shape[1]
        # maximize t subject to n_i·c + t ≤ b_i + ξ
        cost = np.zeros(d + 1)
        cost[-1] = -1.0
        constraints = np.hstack([self.normals, np.ones((self.normals.shape[0], 1))])
        bounds = [(None, None)] * d + [(0.0, None)]
        result = linprog(cost, A_ub=constraints, b_ub=self.offsets + self.xi, bounds=bounds, method="highs")
        if result.status == 3:
            return np.zeros(d), np.inf
        if not result.success:
            return np.zeros(d), 0.0
        return result.x[:-1], float(result.x[-1])

    def inflated(self, xi: float) -> Domain:
        """The same domain with signed inflation ``xi`` added to the current one."""
        return replace(self, xi=self.xi + xi)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "center": None if self.center is None else self.center.tolist(),
            "radius": self.radius,
            "normals": None if self.normals is None else self.normals.tolist(),
            "offsets": None if self.offsets is None else self.offsets.tolist(),
            "xi": self.xi,
        }


def ball(center: ArrayLike, radius: float) -> Domain:
    return Domain(kind="ball", center=np.asarray(center, dtype=float), radius=radius)


def build_domain(settings: DomainSettings, lam: ArrayLike) -> Domain:
    """Domain from settings; the center defaults to λ (its position block for products)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if settings.kind == "halfspaces":
        if settings.normals is None or settings.offsets is None:
            raise DomainError("domain: halfspaces need normals and offsets")
        return Domain(kind="halfspaces", normals=np.asarray(settings.normals), offsets=np.asarray(settings.offsets))
    if settings.kind == "product":
        k = settings.position_dims or max(1, lam.size // 2)
        center = lam[:k] if settings.center is None else np.asarray(settings.center, dtype=float)
        if center.size != k:
            raise DomainError(f"domain.center: expected {k} position coordinates, got {center.size}")
        return Domain(kind="product", center=center, radius=settings.radius)
    center = lam if settings.center is None else np.asarray(settings.center, dtype=float)
    return Domain(kind="ball", center=center, radius=settings.radius)


def nested_domains(domain: Domain, xi: float) -> tuple[Domain, Domain]:
    """(D_{i,ξ}, D_{e,ξ}): D deflated and inflated by ξ.

    Raises:
        DomainError: If ξ is negative or not smaller than the inradius.
    """
    if xi < 0:
        raise DomainError(f"Inflation must be nonnegative, got {xi}")
    radius = domain.inradius()
    if xi >= radius:
        raise DomainError(f"Inflation {xi} is not smaller than the domain inradius {radius:.4g}")
    return domain.inflated(-xi), domain.inflated(xi)

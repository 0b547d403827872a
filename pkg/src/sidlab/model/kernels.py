"""Memory kernels R(t, ·) over past snapshot times."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

KernelKind = Literal["dirac", "uniform", "exponential"]


@dataclass(frozen=True)
class MemoryKernel:
    """Probability kernel weighting past laws.

    Attributes:
        kind: ``dirac`` (R = δ_t), ``uniform`` (R = Leb[0,t]/t) or
            ``exponential`` (density ∝ e^{−η(t−s)} on [0, t]).
        rate: Forgetting rate η of the exponential kind.
    """

    kind: KernelKind = "dirac"
    rate: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("dirac", "uniform", "exponential"):
            raise ValueError(f"Unknown kernel kind: {self.kind}")
        if self.rate < 0:
            raise ValueError("Kernel rate must be nonnegative")

    def fingerprint(self) -> dict[str, Any]:
        return {"kind": self.kind, "rate": self.rate if self.kind == "exponential" else None}


def trapezoid_widths(times: NDArray[np.float64]) -> NDArray[np.float64]:
    """Trapezoid quadrature weights of a nonuniform grid."""
    if times.size == 1:
        return np.ones(1)
    gaps = np.diff(times)
    widths = np.zeros_like(times)
    widths[:-1] += 0.5 * gaps
    widths[1:] += 0.5 * gaps
    return widths


def kernel_weights(kernel: MemoryKernel, times: ArrayLike, t: float) -> NDArray[np.float64]:
    """Quadrature weights of R(t, ·) on snapshot times.

    Args:
        kernel: Memory kernel.
        times: Strictly increasing snapshot times, all ≤ t.
        t: Current time.

    Returns:
        Nonnegative weights summing to one.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        raise ValueError("kernel_weights needs at least one snapshot time")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("Snapshot times must be strictly increasing")
    if times[-1] > t + 1e-12 * max(1.0, abs(t)):
        raise ValueError(f"Snapshot time {times[-1]} lies after t={t}")

    if kernel.kind == "dirac":
        weights = np.zeros_like(times)
        weights[-1] = 1.0
        return weights

    weights = trapezoid_widths(times)
    if kernel.kind == "exponential":
        # Relative to the newest snapshot; normalization removes the constant
        weights = weights * np.exp(-kernel.rate * (times[-1] - times))
    return weights / weights.sum()


def memory_mass(kernel: MemoryKernel, s: float, t: float, resolution: int = 2001) -> float:
    """R(t, [0, s]) on a uniform grid of [0, t]; tends to 0 as t → ∞ (vanishing memory)."""
    if t <= 0:
        return 1.0
    grid = np.linspace(0.0, t, resolution)
    weights = kernel_weights(kernel, grid, t)
    return float(weights[grid <= s].sum())


def vanishing_memory(kernel: MemoryKernel, s: float, t_grid: ArrayLike) -> NDArray[np.float64]:
    """R(t, [0, s]) along ``t_grid``; nonincreasing to 0 for every built-in kernel."""
    return np.array([memory_mass(kernel, s, float(t)) for t in np.atleast_1d(t_grid)])

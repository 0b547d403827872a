"""Snapshot stores and kernel mixtures."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from sidlab.errors import EmptyMeasureError
from sidlab.measure.empirical import EmpiricalMeasure
from sidlab.model.kernels import MemoryKernel, kernel_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StoreView:
    """Immutable snapshot sequence handed to readers."""

    times: tuple[float, ...]
    measures: tuple[EmpiricalMeasure, ...]

    def __len__(self) -> int:
        return len(self.times)


class SnapshotStore:
    """Append-only sequence of (time, empirical measure) snapshots.

    Once ``max_snapshots`` is exceeded an interior snapshot is dropped,
    chosen so that retained spacing grows with age (roughly geometric).
    Uniform and exponential kernels use trapezoid weights on the retained
    grid, so the dropped snapshot's mass passes to its neighbours. The
    first and the two newest snapshots are never dropped.
    """

    def __init__(self, max_snapshots: int | None = None) -> None:
        if max_snapshots is not None and max_snapshots < 3:
            raise ValueError("max_snapshots must be at least 3")
        self.max_snapshots = max_snapshots
        self._times: list[float] = []
        self._measures: list[EmpiricalMeasure] = []
        self.version = 0

    def __len__(self) -> int:
        return len(self._times)

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(self._times)

    @property
    def last_time(self) -> float:
        if not self._times:
            raise EmptyMeasureError("Snapshot store is empty")
        return self._times[-1]

    def latest(self) -> EmpiricalMeasure:
        if not self._measures:
            raise EmptyMeasureError("Snapshot store is empty")
        return self._measures[-1]

    def append(self, t: float, measure: EmpiricalMeasure) -> None:
        """Record a snapshot; times must increase strictly."""
        if self._times and t <= self._times[-1]:
            raise ValueError(f"Snapshot time {t} does not follow {self._times[-1]}")
        self._times.append(float(t))
        self._measures.append(measure)
        if self.max_snapshots is not None and len(self._times) > self.max_snapshots:
            self._thin()
        self.version += 1

    def _thin(self) -> None:
        times = np.asarray(self._times)
        now = times[-1]
        # Candidates 1..n-3 keep the first and the two newest snapshots
        idx = np.arange(1, times.size - 2)
        merged_gap = times[idx + 1] - times[idx - 1]
        age = np.maximum(now - times[idx], np.finfo(float).tiny)
        drop = int(idx[np.argmin(merged_gap / age)])
        logger.debug(f"Thinning snapshot at t={self._times[drop]:.4g}")
        del self._times[drop]
        del self._measures[drop]

    def view(self) -> StoreView:
        return StoreView(tuple(self._times), tuple(self._measures))


def mixture(
    store: SnapshotStore | StoreView, kernel: MemoryKernel, t: float
) -> EmpiricalMeasure:
    """Interaction measure μ_t = Σ_s w_s(t) m_s.

    Raises:
        EmptyMeasureError: If the store holds no snapshot.
    """
    view = store.view() if isinstance(store, SnapshotStore) else store
    if len(view) == 0:
        raise EmptyMeasureError("Cannot form a mixture from an empty store")
    weights = kernel_weights(kernel, view.times, t)
    keep = np.flatnonzero(weights > 0)
    if keep.size == 1:
        return view.measures[int(keep[0])]
    positions = np.concatenate([view.measures[i].positions for i in keep])
    atom_weights = np.concatenate([weights[i] * view.measures[i].weights for i in keep])
    return EmpiricalMeasure.normalized(positions, atom_weights)


def mixture_inequality_gap(
    measures_a: Sequence[EmpiricalMeasure],
    measures_b: Sequence[EmpiricalMeasure],
    weights: Sequence[float],
    distance: Callable[[EmpiricalMeasure, EmpiricalMeasure], float],
) -> tuple[float, float]:
    """Both sides of W₂²(Σ w_s μ_s, Σ w_s ν_s) ≤ Σ w_s W₂²(μ_s, ν_s).

    Args:
        measures_a: Measures μ_s.
        measures_b: Measures ν_s, same length.
        weights: Mixture weights summing to one.
        distance: W₂ routine taking two measures.

    Returns:
        (lhs, rhs) of the inequality.
    """
    w = np.asarray(weights, dtype=float)
    if not (len(measures_a) == len(measures_b) == w.size):
        raise ValueError("Mixture components and weights must have equal lengths")

    def combine(parts: Sequence[EmpiricalMeasure]) -> EmpiricalMeasure:
        positions = np.concatenate([m.positions for m in parts])
        atom_weights = np.concatenate([wi * m.weights for wi, m in zip(w, parts)])
        return EmpiricalMeasure.normalized(positions, atom_weights)

    lhs = distance(combine(measures_a), combine(measures_b)) ** 2
    rhs = float(sum(wi * distance(a, b) ** 2 for wi, a, b in zip(w, measures_a, measures_b)))
    return float(lhs), rhs

"""First-exit detection on discretely sampled paths."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sidlab.errors import DomainError
from sidlab.exits.domains import Domain

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class ExitTime:
    """Exit time of one path, or the horizon when the path never left."""

    time: float
    censored: bool


def _crossing(t0: float, s0: FloatArray, t1: float, s1: FloatArray) -> FloatArray:
    """Zero of the signed distance interpolated linearly on [t0, t1]."""
    fraction = -s0 / (s1 - s0)
    return t0 + np.clip(fraction, 0.0, 1.0) * (t1 - t0)


class ExitDetector:
    """Streaming first-exit detector for a cloud of particles.

    Feed successive states with :meth:`update`; each particle's exit time is
    fixed the first time its state is outside (signed distance ≥ 0).
    """

    def __init__(self, domain: Domain, start: ArrayLike, t0: float = 0.0) -> None:
        start = np.atleast_2d(np.asarray(start, dtype=float))
        distance = domain.signed_distance(start)
        if np.any(distance >= 0.0):
            particle = int(np.flatnonzero(distance >= 0.0)[0])
            raise DomainError(f"Particle {particle} starts outside the domain")
        self.domain = domain
        self.times = np.full(start.shape[0], np.nan)
        self._t = t0
        self._distance = distance

    @property
    def exited(self) -> NDArray[np.bool_]:
        return ~np.isnan(self.times)

    @property
    def all_exited(self) -> bool:
        return bool(np.all(self.exited))

    def update(self, t: float, states: ArrayLike) -> NDArray[np.bool_]:
        """Register states at time t; returns the mask of particles that just exited."""
        distance = self.domain.signed_distance(np.atleast_2d(states))
        fresh = (distance >= 0.0) & ~self.exited
        if np.any(fresh):
            self.times[fresh] = _crossing(self._t, self._distance[fresh], t, distance[fresh])
        self._t = t
        self._distance = distance
        return fresh

    def results(self, horizon: float | None = None) -> list[ExitTime]:
        end = self._t if horizon is None else horizon
        return [
            ExitTime(time=float(t), censored=False) if np.isfinite(t) else ExitTime(time=end, censored=True)
            for t in self.times
        ]


def first_exit(path: Iterable[tuple[float, ArrayLike]], domain: Domain) -> ExitTime:
    """First exit time of a single path given as (time, state) pairs.

    The first sampled state outside is located and the crossing time is
    refined by linear interpolation of the signed distance across the
    bracketing step. A path that stays inside is censored at its last time.

    Raises:
        DomainError: If the path starts outside the domain.
    """
    iterator = iter(path)
    try:
        t0, z0 = next(iterator)
    except StopIteration:
        raise ValueError("Empty path") from None
    detector = ExitDetector(domain, z0, float(t0))
    for t, z in iterator:
        if detector.update(float(t), z)[0]:
            break
    return detector.results()[0]


def path_pairs(times: ArrayLike, states: ArrayLike) -> Iterable[tuple[float, FloatArray]]:
    """(time, state) pairs of a recorded path of shape (T, d)."""
    return zip(np.asarray(times, dtype=float).tolist(), np.asarray(states, dtype=float))

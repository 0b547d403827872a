"""Empirical measures, snapshot stores and Wasserstein distances."""

from sidlab.measure.empirical import EmpiricalMeasure, second_moment_about
from sidlab.measure.store import SnapshotStore, StoreView, mixture, mixture_inequality_gap
from sidlab.measure.wasserstein import w2_1d, w2_exact_small, w2_matched, w2_sliced

__all__ = [
    "EmpiricalMeasure",
    "SnapshotStore",
    "StoreView",
    "mixture",
    "mixture_inequality_gap",
    "second_moment_about",
    "w2_1d",
    "w2_exact_small",
    "w2_matched",
    "w2_sliced",
]

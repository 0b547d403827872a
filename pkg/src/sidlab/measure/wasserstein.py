"""Quadratic Wasserstein distances between empirical measures."""

from __future__ import annotations

import logging
import math

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linear_sum_assignment, linprog
from scipy.spatial.distance import cdist

from sidlab.config.defaults import DEFAULT_EXACT_W2_CAP
from sidlab.errors import ConvergenceError, DimensionMismatchError, SizeCapError
from sidlab.measure.empirical import EmpiricalMeasure

logger = logging.getLogger(__name__)

_SPLIT_TOLERANCE = 1e-9


def _check_dims(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> None:
    if mu.dim != nu.dim:
        raise DimensionMismatchError(f"Measures of dimension {mu.dim} and {nu.dim}")


def _multiplicity(weights: NDArray[np.float64], cap: int) -> int | None:
    """Smallest K ≤ cap making every K·wᵢ an integer, if any."""
    factors = np.arange(1, cap + 1)[:, None]
    scaled = factors * weights[None, :]
    ok = np.all(np.abs(scaled - np.rint(scaled)) <= _SPLIT_TOLERANCE * factors, axis=1)
    hits = np.flatnonzero(ok)
    return int(hits[0]) + 1 if hits.size else None


def _split(measure: EmpiricalMeasure, total: int) -> NDArray[np.float64]:
    counts = np.rint(measure.weights * total).astype(int)
    return np.repeat(measure.positions, counts, axis=0)


def _transport_lp(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    n, m = mu.size, nu.size
    cost = cdist(mu.positions, nu.positions, "sqeuclidean")
    rows = np.kron(np.eye(n), np.ones((1, m)))
    cols = np.kron(np.ones((1, n)), np.eye(m))
    result = linprog(
        cost.ravel(),
        A_eq=np.vstack([rows, cols]),
        b_eq=np.concatenate([mu.weights, nu.weights]),
        bounds=(0, None),
        method="highs",
    )
    if not result.success:
        raise ConvergenceError(f"Transport LP failed: {result.message}")
    return max(float(result.fun), 0.0)


def w2_exact_small(
    mu: EmpiricalMeasure, nu: EmpiricalMeasure, cap: int = DEFAULT_EXACT_W2_CAP
) -> float:
    """Exact W₂ for small measures.

    Rational weights are split into equal-mass atoms and solved as an
    assignment problem; other weights go through the transport linear
    program.

    Raises:
        SizeCapError: If either measure has more than ``cap`` atoms.
    """
    _check_dims(mu, nu)
    if mu.size > cap or nu.size > cap:
        raise SizeCapError(f"Exact W2 is capped at {cap} atoms (got {mu.size} and {nu.size})")

    k_mu, k_nu = _multiplicity(mu.weights, cap), _multiplicity(nu.weights, cap)
    if k_mu is not None and k_nu is not None and math.lcm(k_mu, k_nu) <= cap:
        total = math.lcm(k_mu, k_nu)
        cost = cdist(_split(mu, total), _split(nu, total), "sqeuclidean")
        row, col = linear_sum_assignment(cost)
        return math.sqrt(max(float(cost[row, col].sum()) / total, 0.0))

    logger.debug(f"Exact W2 via transport LP on {mu.size}x{nu.size} atoms")
    return math.sqrt(_transport_lp(mu, nu))


def _quantile_squared(
    x: NDArray[np.float64], a: NDArray[np.float64], y: NDArray[np.float64], b: NDArray[np.float64]
) -> float:
    ox, oy = np.argsort(x, kind="stable"), np.argsort(y, kind="stable")
    x, a, y, b = x[ox], a[ox], y[oy], b[oy]
    cum_a, cum_b = np.cumsum(a), np.cumsum(b)
    cum_a[-1] = cum_b[-1] = 1.0
    levels = np.union1d(cum_a, cum_b)
    levels = levels[(levels > 0) & (levels <= 1.0)]
    masses = np.diff(np.concatenate([[0.0], levels]))
    mids = levels - 0.5 * masses
    ia = np.minimum(np.searchsorted(cum_a, mids, side="left"), x.size - 1)
    ib = np.minimum(np.searchsorted(cum_b, mids, side="left"), y.size - 1)
    return float(masses @ (x[ia] - y[ib]) ** 2)


def w2_1d(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Exact one-dimensional W₂ through the monotone (quantile) coupling."""
    _check_dims(mu, nu)
    if mu.dim != 1:
        raise DimensionMismatchError(f"w2_1d needs one-dimensional measures, got d={mu.dim}")
    sq = _quantile_squared(mu.positions[:, 0], mu.weights, nu.positions[:, 0], nu.weights)
    return math.sqrt(max(sq, 0.0))


def w2_matched(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Upper bound on W₂ from the index coupling xᵢ ↔ yᵢ.

    Both measures must have the same atom count and weights.
    """
    _check_dims(mu, nu)
    if mu.size != nu.size:
        raise DimensionMismatchError(f"Matched coupling needs equal sizes ({mu.size} vs {nu.size})")
    if not np.allclose(mu.weights, nu.weights, atol=1e-12):
        raise ValueError("Matched coupling needs identical weights")
    sq = float(mu.weights @ np.sum((mu.positions - nu.positions) ** 2, axis=1))
    return math.sqrt(sq)


def w2_sliced(
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    rng: np.random.Generator,
    projections: int = 64,
) -> float:
    """Sliced W₂: root mean of one-dimensional W₂² over random directions."""
    _check_dims(mu, nu)
    directions = rng.standard_normal((projections, mu.dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    total = 0.0
    for direction in directions:
        total += _quantile_squared(
            mu.positions @ direction, mu.weights, nu.positions @ direction, nu.weights
        )
    return math.sqrt(total / projections)

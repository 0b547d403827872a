"""Kramers regression of mean log exit times against 1/σ²."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from sidlab.config.defaults import (
    DEFAULT_CENSOR_LIMIT,
    DEFAULT_CONFIDENCE,
    DEFAULT_MIN_REPLICAS,
    DEFAULT_MIN_SIGMA_POINTS,
)
from sidlab.errors import InsufficientDataError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


@dataclass
class SigmaSamples:
    """Exit-time samples at one noise level.

    Censored samples hold the horizon as their time.
    """

    sigma: float
    times: FloatArray
    censored: NDArray[np.bool_]
    horizon: float = np.inf
    dt: float | None = None

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.censored = np.asarray(self.censored, dtype=bool)
        if self.times.shape != self.censored.shape:
            raise ValueError("times and censored flags must have the same length")

    @classmethod
    def from_times(cls, sigma: float, times: ArrayLike) -> SigmaSamples:
        times = np.asarray(times, dtype=float)
        return cls(sigma=sigma, times=times, censored=np.zeros(times.shape, dtype=bool))

    @property
    def count(self) -> int:
        return int(self.times.size)

    @property
    def uncensored(self) -> FloatArray:
        return self.times[~self.censored]

    @property
    def censored_fraction(self) -> float:
        return float(self.censored.mean()) if self.count else 0.0

    @property
    def mean_log(self) -> float:
        return float(np.mean(np.log(self.uncensored))) if self.uncensored.size else np.nan

    @property
    def stderr_log(self) -> float:
        values = np.log(self.uncensored)
        if values.size < 2:
            return np.nan
        return float(np.std(values, ddof=1) / np.sqrt(values.size))

    def summary(self) -> dict[str, Any]:
        return {
            "sigma": self.sigma,
            "count": self.count,
            "censored_fraction": self.censored_fraction,
            "mean_log": self.mean_log,
            "stderr_log": self.stderr_log,
            "horizon": self.horizon,
            "dt": self.dt,
        }


@dataclass
class KramersFit:
    """OLS fit of mean(log τ) − q·log σ² = intercept + slope/σ².

    Attributes:
        slope: Fitted slope, an estimate of 2H.
        intercept: Fitted intercept.
        slope_ci: Confidence interval of the slope.
        intercept_stderr: Standard error of the intercept.
        used: σ values that entered the regression.
        flagged: σ values excluded for censoring or too few samples.
        prefactor_power: q.
        confidence: Confidence level of the intervals.
    """

    slope: float
    intercept: float
    slope_ci: tuple[float, float]
    intercept_stderr: float
    used: list[float] = field(default_factory=list)
    flagged: list[float] = field(default_factory=list)
    prefactor_power: float = 0.0
    confidence: float = DEFAULT_CONFIDENCE

    @property
    def exponent(self) -> float:
        """Ĥ = slope / 2."""
        return self.slope / 2.0

    @property
    def exponent_ci(self) -> tuple[float, float]:
        return (self.slope_ci[0] / 2.0, self.slope_ci[1] / 2.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_ci": list(self.slope_ci),
            "intercept_stderr": self.intercept_stderr,
            "exponent": self.exponent,
            "exponent_ci": list(self.exponent_ci),
            "used": self.used,
            "flagged": self.flagged,
            "prefactor_power": self.prefactor_power,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> KramersFit:
        return cls(
            slope=data["slope"],
            intercept=data["intercept"],
            slope_ci=(data["slope_ci"][0], data["slope_ci"][1]),
            intercept_stderr=data["intercept_stderr"],
            used=list(data.get("used", [])),
            flagged=list(data.get("flagged", [])),
            prefactor_power=data.get("prefactor_power", 0.0),
            confidence=data.get("confidence", DEFAULT_CONFIDENCE),
        )


def usable(samples: SigmaSamples, min_replicas: int, censor_limit: float) -> bool:
    return samples.censored_fraction <= censor_limit and samples.uncensored.size >= min_replicas


def kramers_fit(
    samples: Sequence[SigmaSamples],
    *,
    min_replicas: int = DEFAULT_MIN_REPLICAS,
    prefactor_power: float = 0.0,
    censor_limit: float = DEFAULT_CENSOR_LIMIT,
    confidence: float = DEFAULT_CONFIDENCE,
) -> KramersFit:
    """Regress mean(log τ_σ) − q·log σ² on 1/σ².

    σ points censored above ``censor_limit`` or with fewer than
    ``min_replicas`` exits are flagged and left out. The slope standard
    error propagates the per-σ standard errors of the mean through the OLS
    weights.

    Raises:
        InsufficientDataError: With fewer than three usable σ points.
    """
    kept = [s for s in samples if usable(s, min_replicas, censor_limit)]
    flagged = [s.sigma for s in samples if not usable(s, min_replicas, censor_limit)]
    for s in samples:
        if s.censored_fraction > censor_limit:
            logger.warning(
                f"sigma={s.sigma:.4g}: {s.censored_fraction:.0%} of runs censored; point left out of the fit"
            )
    if len(kept) < DEFAULT_MIN_SIGMA_POINTS:
        raise InsufficientDataError(
            f"Kramers fit needs {DEFAULT_MIN_SIGMA_POINTS} usable sigma points "
            f"with at least {min_replicas} exits each, got {len(kept)}"
        )

    sigma_sq = np.array([s.sigma**2 for s in kept])
    x = 1.0 / sigma_sq
    y = np.array([s.mean_log for s in kept]) - prefactor_power * np.log(sigma_sq)
    se = np.array([s.stderr_log for s in kept])

    x_bar = x.mean()
    sxx = float(np.sum((x - x_bar) ** 2))
    if sxx <= 0:
        raise InsufficientDataError("Kramers fit needs distinct sigma values")
    c = (x - x_bar) / sxx
    slope = float(np.sum(c * y))
    intercept = float(y.mean() - slope * x_bar)
    slope_se = float(np.sqrt(np.sum(c**2 * se**2)))
    intercept_se = float(np.sqrt(np.sum((1.0 / x.size - x_bar * c) ** 2 * se**2)))
    z = float(stats.norm.ppf(0.5 + confidence / 2.0))

    fit = KramersFit(
        slope=slope,
        intercept=intercept,
        slope_ci=(slope - z * slope_se, slope + z * slope_se),
        intercept_stderr=intercept_se,
        used=[s.sigma for s in kept],
        flagged=flagged,
        prefactor_power=prefactor_power,
        confidence=confidence,
    )
    logger.info(
        f"Kramers fit on {len(kept)} sigma points: H={fit.exponent:.4f} "
        f"[{fit.exponent_ci[0]:.4f}, {fit.exponent_ci[1]:.4f}]"
    )
    return fit

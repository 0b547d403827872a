"""Monte Carlo exit-time campaigns over a grid of noise levels."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from sidlab.config.defaults import DEFAULT_DT_NOISE_RATIO, DEFAULT_MIN_SIGMA_POINTS
from sidlab.config.settings import CampaignSettings, IntegratorSettings
from sidlab.engine.particles import ParticleSystem
from sidlab.errors import DomainError, InsufficientDataError, NotGradientError
from sidlab.exits.detection import ExitDetector, ExitTime
from sidlab.exits.domains import Domain
from sidlab.exits.fit import KramersFit, SigmaSamples, kramers_fit
from sidlab.model.config import ModelConfig
from sidlab.utils.rng import stream

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


@dataclass
class ExitCampaignResult:
    """Exit-time samples per σ with their Kramers fit.

    ``fit`` is None when fewer than three σ points were usable.
    """

    samples: list[SigmaSamples]
    fit: KramersFit | None
    seed: int
    model_hash: str
    lam: FloatArray
    mode: str = "tagged"
    process: str = "interacting"
    predicted_h: float | None = None
    reference_l: float | None = None
    settings: dict[str, Any] = field(default_factory=dict)

    @property
    def sigmas(self) -> list[float]:
        return [s.sigma for s in self.samples]

    @property
    def exponent(self) -> float | None:
        return None if self.fit is None else self.fit.exponent

    def header(self) -> dict[str, Any]:
        return {
            "model_hash": self.model_hash,
            "seed": self.seed,
            "lambda": np.asarray(self.lam).tolist(),
            "mode": self.mode,
            "process": self.process,
            "predicted_h": self.predicted_h,
            "reference_l": self.reference_l,
            "sigmas": self.sigmas,
            "per_sigma": [s.summary() for s in self.samples],
            "settings": self.settings,
        }


@dataclass(frozen=True)
class _ReplicaTask:
    config: ModelConfig
    domain: Domain
    integrator: IntegratorSettings
    lam: FloatArray
    sigma_index: int
    replica: int
    seed: int
    horizon: float
    mode: str
    process: str


def predict_exponent(config: ModelConfig, lam: ArrayLike, domain: Domain) -> float | None:
    """Closed-form exit exponent of the frozen gradient model, or None."""
    from sidlab.quasipotential.closed_form import elliptic_exponent

    try:
        return elliptic_exponent(config, lam, domain)
    except (NotGradientError, DomainError) as e:
        logger.debug(f"No closed-form exponent: {e}")
        return None


def predict_reference(config: ModelConfig, lam: ArrayLike, domain: Domain) -> float | None:
    """Exit exponent L of the confinement alone, the interaction removed, or None."""
    from sidlab.quasipotential.closed_form import exit_cost_gap

    predicted = predict_exponent(config, lam, domain)
    if predicted is None:
        return None
    try:
        return predicted + exit_cost_gap(config, lam, domain)
    except (NotGradientError, DomainError) as e:
        logger.debug(f"No closed-form reference exponent: {e}")
        return None


def default_sigma_grid(predicted_h: float, points: int = 4) -> list[float]:
    """σ values with σ² spread evenly in 1/σ² over [H/4, H/1.2]."""
    inverse = np.linspace(1.2 / predicted_h, 4.0 / predicted_h, points)
    return [float(1.0 / math.sqrt(v)) for v in inverse]


def campaign_step(sigma: float, integrator: IntegratorSettings, settings: CampaignSettings) -> float:
    if settings.dt is not None:
        return settings.dt
    return min(integrator.dt, DEFAULT_DT_NOISE_RATIO * sigma**2)


def campaign_horizon(
    sigma: float,
    integrator: IntegratorSettings,
    settings: CampaignSettings,
    predicted_h: float | None,
) -> float:
    if settings.horizon is not None:
        return settings.horizon
    if predicted_h is not None:
        return settings.horizon_multiplier * math.exp(2.0 * predicted_h / sigma**2)
    return integrator.horizon


def check_initial_support(config: ModelConfig, domain: Domain) -> None:
    """Raise DomainError unless the initial law is supported inside D."""
    law = config.initial
    if law.kind == "empirical":
        assert law.measure is not None
        inside = bool(np.all(domain.contains(law.measure.positions)))
    else:
        assert law.center is not None
        margin = law.radius if law.kind == "ball" else 0.0
        inside = bool(domain.signed_distance(law.center) + margin < 0.0)
    if not inside:
        raise DomainError("The initial law is not supported inside the exit domain")


def _simulate_replica(task: _ReplicaTask) -> tuple[int, int, list[ExitTime]]:
    config = task.config
    rng = stream(task.seed, task.sigma_index, task.replica, purpose="campaign")
    frozen = task.process == "frozen"
    count = 1 if frozen and task.mode == "tagged" else task.integrator.particles
    system = ParticleSystem(
        config,
        task.integrator,
        rng,
        particles=count,
        frozen_at=task.lam if frozen else None,
    )
    detector = ExitDetector(task.domain, system.state)
    total = max(1, math.ceil(task.horizon / system.dt - 1e-9))
    for _ in range(total):
        system.step()
        detector.update(system.time, system.state)
        if task.mode == "tagged" and detector.exited[0]:
            break
        if detector.all_exited:
            break
    results = detector.results(horizon=task.horizon)
    return task.sigma_index, task.replica, results[:1] if task.mode == "tagged" else results


def _execute(
    tasks: Sequence[_ReplicaTask],
    workers: int,
    progress_callback: Callable[[str], None] | None,
) -> dict[tuple[int, int], list[ExitTime]]:
    done: dict[tuple[int, int], list[ExitTime]] = {}
    if workers <= 1:
        outputs = map(_simulate_replica, tasks)
        for sigma_index, replica, exits in outputs:
            done[(sigma_index, replica)] = exits
            if progress_callback:
                progress_callback(f"{len(done)}/{len(tasks)} replicas")
        return done
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for sigma_index, replica, exits in pool.map(_simulate_replica, tasks, chunksize=4):
            done[(sigma_index, replica)] = exits
            if progress_callback:
                progress_callback(f"{len(done)}/{len(tasks)} replicas")
    return done


def run_campaign(
    config: ModelConfig,
    domain: Domain,
    settings: CampaignSettings,
    integrator: IntegratorSettings,
    *,
    seed: int = 0,
    workers: int = 1,
    lam: ArrayLike | None = None,
    progress_callback: Callable[[str], None] | None = None,
) -> ExitCampaignResult:
    """Simulate exits from ``domain`` at every σ of the campaign grid and fit H.

    In ``tagged`` mode each replica contributes the exit time of particle 0
    of an N-particle system; in ``per-particle`` mode every particle of the
    replica contributes. The ``frozen`` process replaces the interaction
    measure by δ_λ. Task streams are keyed by (seed, σ index, replica) so
    results do not depend on the worker count.

    Raises:
        DomainError: If λ or the initial law lies outside the domain.
        InsufficientDataError: If the σ grid has fewer than three points.
    """
    if lam is None:
        from sidlab.fixedpoint import find_lambda

        lam = find_lambda(config).lam
    lam = np.asarray(lam, dtype=float)
    if not domain.contains(lam):
        raise DomainError("The self-consistent rest point lies outside the exit domain")
    check_initial_support(config, domain)

    predicted = settings.predicted_h or predict_exponent(config, lam, domain)
    if settings.sigmas is not None:
        sigmas = list(settings.sigmas)
    elif predicted is not None:
        sigmas = default_sigma_grid(predicted)
    else:
        raise InsufficientDataError("No sigma grid given and no exponent prediction available")
    if len(sigmas) < DEFAULT_MIN_SIGMA_POINTS:
        raise InsufficientDataError(f"Campaign needs at least {DEFAULT_MIN_SIGMA_POINTS} sigma values")

    tasks: list[_ReplicaTask] = []
    plan: list[tuple[float, float, float]] = []
    for i, sigma in enumerate(sigmas):
        dt = campaign_step(sigma, integrator, settings)
        horizon = campaign_horizon(sigma, integrator, settings, predicted)
        plan.append((sigma, dt, horizon))
        step_settings = integrator.model_copy(
            update={"dt": dt, "particles": settings.particles or integrator.particles}
        )
        logger.info(f"sigma={sigma:.4f}: dt={dt:.3g}, horizon={horizon:.4g}, {settings.replicas} replicas")
        tasks.extend(
            _ReplicaTask(
                config=config.with_sigma(sigma),
                domain=domain,
                integrator=step_settings,
                lam=lam,
                sigma_index=i,
                replica=r,
                seed=seed,
                horizon=horizon,
                mode=settings.mode,
                process=settings.process,
            )
            for r in range(settings.replicas)
        )

    done = _execute(tasks, workers, progress_callback)

    per_sigma: list[SigmaSamples] = []
    for i, (sigma, dt, horizon) in enumerate(plan):
        exits = [e for r in range(settings.replicas) for e in done[(i, r)]]
        samples = SigmaSamples(
            sigma=sigma,
            times=np.array([e.time for e in exits]),
            censored=np.array([e.censored for e in exits]),
            horizon=horizon,
            dt=dt,
        )
        logger.info(
            f"sigma={sigma:.4f}: {samples.count} exits, {samples.censored_fraction:.1%} censored, "
            f"mean log tau {samples.mean_log:.3f}"
        )
        per_sigma.append(samples)

    try:
        fit = kramers_fit(
            per_sigma,
            min_replicas=settings.min_replicas,
            prefactor_power=settings.prefactor_power,
            censor_limit=settings.censor_limit,
            confidence=settings.confidence,
        )
    except InsufficientDataError as e:
        logger.warning(f"Campaign finished without a fit: {e}")
        fit = None

    return ExitCampaignResult(
        samples=per_sigma,
        fit=fit,
        seed=seed,
        model_hash=config.model_hash(),
        lam=lam,
        mode=settings.mode,
        process=settings.process,
        predicted_h=predicted,
        reference_l=predict_reference(config, lam, domain),
        settings=settings.model_dump(mode="json"),
    )


@dataclass
class CampaignComparison:
    """One-sided Mann–Whitney tests that campaign A exits earlier than B."""

    sigmas: list[float]
    p_values: list[float]
    exponent_separated: bool | None

    def all_below(self, level: float) -> bool:
        return bool(self.p_values) and all(p < level for p in self.p_values)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sigmas": self.sigmas,
            "p_values": self.p_values,
            "exponent_separated": self.exponent_separated,
        }


def compare_campaigns(a: ExitCampaignResult, b: ExitCampaignResult, rtol: float = 1e-9) -> CampaignComparison:
    """Compare exit times of ``a`` and ``b`` at their shared σ values.

    Censored samples enter the rank test at their horizon. The exponent
    intervals are separated when the upper end of A lies below the lower end
    of B.
    """
    sigmas, p_values = [], []
    for sa in a.samples:
        match = next((sb for sb in b.samples if math.isclose(sa.sigma, sb.sigma, rel_tol=rtol)), None)
        if match is None:
            continue
        test = stats.mannwhitneyu(sa.times, match.times, alternative="less")
        sigmas.append(sa.sigma)
        p_values.append(float(test.pvalue))
    separated = None
    if a.fit is not None and b.fit is not None:
        separated = a.fit.exponent_ci[1] < b.fit.exponent_ci[0]
    return CampaignComparison(sigmas=sigmas, p_values=p_values, exponent_separated=separated)


@dataclass
class InvarianceReport:
    """Zero-noise confinement check."""

    stays_inside: bool
    max_signed_distance: float
    max_displacement: float
    horizon: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "stays_inside": self.stays_inside,
            "max_signed_distance": self.max_signed_distance,
            "max_displacement": self.max_displacement,
            "horizon": self.horizon,
        }


def deterministic_invariance_check(
    config: ModelConfig,
    domain: Domain,
    horizon: float,
    integrator: IntegratorSettings | None = None,
    *,
    seed: int = 0,
) -> InvarianceReport:
    """Run the σ = 0 particle system from the initial law and track the signed distance.

    For ball initial laws the sample includes the extreme points of the
    ball along each axis. Failure is reported, never raised.
    """
    integrator = integrator or IntegratorSettings()
    rng = stream(seed, purpose="init")
    initial = config.initial.sample(integrator.particles, rng)
    law = config.initial
    if law.kind == "ball" and law.radius > 0:
        assert law.center is not None
        axes = np.eye(config.dim) * law.radius
        initial = np.vstack([initial, law.center + axes, law.center - axes])
    system = ParticleSystem(config.with_sigma(0.0), integrator, rng, initial=initial)
    start = system.state.copy()
    worst = float(np.max(domain.signed_distance(start)))
    displacement = 0.0
    for _ in range(max(1, math.ceil(horizon / system.dt - 1e-9))):
        system.step()
        worst = max(worst, float(np.max(domain.signed_distance(system.state))))
        displacement = max(displacement, float(np.max(np.linalg.norm(system.state - start, axis=1))))
    report = InvarianceReport(
        stays_inside=worst < 0.0,
        max_signed_distance=worst,
        max_displacement=displacement,
        horizon=horizon,
    )
    if not report.stays_inside:
        logger.warning(f"Zero-noise trajectories leave the domain (max signed distance {worst:.4g})")
    return report

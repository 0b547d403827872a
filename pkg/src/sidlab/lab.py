"""Experiment runner that ties models, simulations and result files together."""

from __future__ import annotations

import hashlib
import logging
import math
import platform
import shutil
import tempfile
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from sidlab import __version__
from sidlab.errors import ConfigError, InwardFlowError, ModelMismatchError, NotGradientError, UsageError
from sidlab.exits import (
    ExitCampaignResult,
    build_domain,
    compare_campaigns,
    deterministic_invariance_check,
    predict_exponent,
    run_campaign,
)
from sidlab.fixedpoint import find_lambda
from sidlab.formatters.records import (
    TrajectoryLog,
    read_campaign,
    read_manifest,
    read_plot_data,
    sniff_kind,
    write_campaign,
    write_manifest,
    write_measure,
    write_plot_data,
)
from sidlab.measure import EmpiricalMeasure
from sidlab.model import MemoryKernel, build_model, vanishing_memory
from sidlab.model.config import ModelConfig
from sidlab.model.drift import KineticDrift
from sidlab.utils.logging import run_label

if TYPE_CHECKING:
    from sidlab.config.settings import Settings

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.yaml"
TRACKED_PACKAGES = ("numpy", "scipy", "pydantic", "pyyaml")


@dataclass
class RunResult:
    """Artifacts and headline numbers of one lab run."""

    command: str
    output_dir: Path
    artifacts: dict[str, str] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)

    @property
    def manifest_path(self) -> Path:
        return self.output_dir / MANIFEST_NAME

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "output_dir": str(self.output_dir),
            "artifacts": self.artifacts,
            "summary": self.summary,
        }


@dataclass
class ReportRow:
    """One campaign in a consolidated report; ``reference`` is the exponent L without interaction."""

    path: str
    process: str
    exponent: float | None
    ci: tuple[float, float] | None
    predicted: float | None
    reference: float | None
    passed: bool | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "path": self.path,
            "process": self.process,
            "exponent": self.exponent,
            "ci": None if self.ci is None else list(self.ci),
            "predicted": self.predicted,
            "reference": self.reference,
            "passed": self.passed,
        }


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_versions() -> dict[str, str]:
    versions = {"sidlab": __version__, "python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def _json_ready(value: Any) -> Any:
    """Convert numpy containers inside summaries to plain Python."""
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


class Lab:
    """Runs the sidlab experiments described by a :class:`Settings` object.

    Every run works in a hidden scratch directory next to its final
    location. On success the artifacts and a manifest (settings snapshot,
    seed, package versions and SHA-256 hashes) move to
    ``<output_dir>/<command>-<model hash>-s<seed>``; on failure the scratch
    directory is removed.
    """

    def __init__(
        self,
        settings: Settings | None = None,
        progress_callback: Callable[[str], None] | None = None,
    ) -> None:
        if settings is None:
            from sidlab.config.settings import get_settings

            settings = get_settings()
        self.settings = settings
        self.on_progress = progress_callback
        self._config: ModelConfig | None = None

    @classmethod
    def from_manifest(cls, path: str | Path, **kwargs: Any) -> Lab:
        """Lab configured exactly as the run that wrote ``path``."""
        from sidlab.config.settings import Settings

        manifest = read_manifest(path)
        try:
            return cls(Settings(**manifest["settings"]), **kwargs)
        except KeyError as e:
            raise ConfigError(f"Manifest {path} has no settings snapshot") from e

    @property
    def config(self) -> ModelConfig:
        if self._config is None:
            self._config = build_model(self.settings.model)
        return self._config

    def _progress(self, message: str) -> None:
        logger.info(message)
        if self.on_progress:
            self.on_progress(message)

    def _target_dir(self, command: str) -> Path:
        base = Path(self.settings.output_dir)
        name = f"{command}-{self.config.model_hash()[:8]}-s{self.settings.seed}"
        target = base / name
        suffix = 2
        while target.exists():
            target = base / f"{name}-{suffix}"
            suffix += 1
        return target

    def _run(self, command: str, body: Callable[[Path], dict[str, Any]]) -> RunResult:
        base = Path(self.settings.output_dir)
        base.mkdir(parents=True, exist_ok=True)
        scratch = Path(tempfile.mkdtemp(prefix=f".{command}-", dir=base))
        try:
            with run_label(f"{command}-s{self.settings.seed}"):
                summary = _json_ready(body(scratch))
            artifacts = {
                p.name: sha256_file(p) for p in sorted(scratch.iterdir()) if p.is_file()
            }
            write_manifest(
                scratch / MANIFEST_NAME,
                {
                    "command": command,
                    "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                    "seed": self.settings.seed,
                    "model_hash": self.config.model_hash(),
                    "versions": package_versions(),
                    "artifacts": artifacts,
                    "summary": summary,
                    "settings": self.settings.to_dict(),
                },
            )
            target = self._target_dir(command)
            shutil.move(str(scratch), str(target))
        except BaseException:
            shutil.rmtree(scratch, ignore_errors=True)
            logger.debug(f"Removed partial output {scratch}")
            raise
        logger.info(f"{command} results written to {target}")
        return RunResult(command=command, output_dir=target, artifacts=artifacts, summary=summary)

    def _lam(self) -> np.ndarray:
        result = find_lambda(self.config)
        return result.lam

    # Commands

    def simulate(self, *, frozen: bool = False) -> RunResult:
        """Simulate the particle system (or the frozen process) and log the trajectories."""
        from sidlab.engine import simulate_linear_frozen, simulate_particles

        def body(out: Path) -> dict[str, Any]:
            config, integrator = self.config, self.settings.integrator
            self._progress(f"Simulating {integrator.particles} particles to T={integrator.horizon}")
            if frozen:
                lam = self._lam()
                batch = simulate_linear_frozen(config, lam, integrator, seed=self.settings.seed)
            else:
                batch, _ = simulate_particles(config, integrator, seed=self.settings.seed)
            with TrajectoryLog(out / "trajectory.txt", config.dim, model=config.name,
                               sigma=config.sigma, frozen=frozen) as log:
                for t, states in zip(batch.times, batch.states):
                    log.append(t, states)
            write_measure(out / "final_measure.txt", EmpiricalMeasure.uniform(batch.final),
                          time=float(batch.times[-1]))
            return {**batch.to_dict(), "frozen": frozen}

        return self._run("simulate", body)

    def campaign(self, *, with_frozen: bool = False) -> RunResult:
        """Exit-time campaign with Kramers fit, optionally paired with the frozen process."""

        def body(out: Path) -> dict[str, Any]:
            config = self.config
            lam = self._lam()
            domain = build_domain(self.settings.domain, lam)
            runs = [self.settings.campaign]
            if with_frozen:
                runs.append(self.settings.campaign.model_copy(update={"process": "frozen"}))
            results: list[ExitCampaignResult] = []
            for settings in runs:
                self._progress(f"Running {settings.process} campaign")
                result = run_campaign(
                    config,
                    domain,
                    settings,
                    self.settings.integrator,
                    seed=self.settings.seed,
                    workers=self.settings.workers,
                    lam=lam,
                    progress_callback=self.on_progress,
                )
                write_campaign(out / f"campaign-{settings.process}.txt", result)
                _write_regression(out / f"regression-{settings.process}.txt", result)
                results.append(result)
            summary: dict[str, Any] = {
                "lambda": lam,
                "predicted_h": results[0].predicted_h,
                "reference_l": results[0].reference_l,
                "campaigns": {r.process: _fit_summary(r) for r in results},
            }
            if len(results) == 2:
                summary["comparison"] = compare_campaigns(results[0], results[1]).to_dict()
            return summary

        return self._run("campaign", body)

    def couple(self) -> RunResult:
        """Couple the particle system with its frozen process and check both inequalities."""
        from sidlab.engine import parallel_couple, verify_coupling
        from sidlab.model.probes import probe_dissipativity

        def body(out: Path) -> dict[str, Any]:
            config = self.config
            lam = self._lam()
            if config.declared_rho is not None and config.declared_kappa is not None:
                rho, kappa, source = config.declared_rho, config.declared_kappa, "declared"
            else:
                probe = probe_dissipativity(config, self.settings.probe.samples,
                                            self.settings.probe.radius, seed=self.settings.seed)
                rho, kappa, source = probe.rho, probe.kappa, "probed"
            self._progress(f"Coupling with rho={rho:.4g}, kappa={kappa:.4g} ({source})")
            result = parallel_couple(config, lam, self.settings.integrator, seed=self.settings.seed)
            report = verify_coupling(result, rho, kappa)
            write_plot_data(
                out / "coupling-gap.txt",
                "coupling gap decay",
                ["time", "mean_gap_sq", "stderr", "bound"],
                np.column_stack([result.times, result.mean_gap_sq, result.mean_gap_stderr, report.bound]),
                rho=rho,
                kappa=kappa,
            )
            return {"rho": rho, "kappa": kappa, "constants": source,
                    "coupling": result.to_dict(), "report": report.to_dict()}

        return self._run("couple", body)

    def fixed_point(self) -> RunResult:
        def body(_out: Path) -> dict[str, Any]:
            result = find_lambda(self.config)
            self._progress(f"lambda = {result.lam} (residual {result.residual:.3e})")
            return result.to_dict()

        return self._run("lambda", body)

    def quasipotential(self) -> RunResult:
        """Closed-form exponents, minimized actions and the reduction probe."""
        from sidlab.quasipotential import (
            elliptic_exponent,
            exit_action,
            exit_cost_gap,
            reduction_probe,
        )

        def body(out: Path) -> dict[str, Any]:
            config, qp = self.config, self.settings.quasipotential
            lam = self._lam()
            domain = build_domain(self.settings.domain, lam)
            summary: dict[str, Any] = {"lambda": lam}
            try:
                summary["elliptic_h"] = elliptic_exponent(config, lam, domain)
            except NotGradientError as e:
                summary["elliptic_h"] = None
                logger.info(f"No closed-form exponent: {e}")
            if not isinstance(config.drift, KineticDrift):
                self._progress(f"Minimizing the action at {qp.targets} boundary targets")
                action = exit_action(config, lam, domain, targets=qp.targets, nodes=qp.nodes)
                summary["action"] = action.to_dict()
                write_plot_data(
                    out / "action-path.txt",
                    "minimum action path",
                    ["time", *(f"z{i + 1}" for i in range(config.dim))],
                    np.column_stack([action.path.times, action.path.states]),
                    value=action.value,
                )
                try:
                    summary["exit_cost_gap"] = exit_cost_gap(config, lam, domain)
                except NotGradientError as e:
                    logger.info(f"No exit cost gap: {e}")
                summary["reduction"] = reduction_probe(
                    config, lam, domain, resolution=qp.reduction_grid
                ).to_dict()
            return summary

        return self._run("quasipotential", body)

    def gronwall(self) -> RunResult:
        """Random domination suite plus envelope overlays for one parameter set."""
        from sidlab.gronwall import build_envelope, integrate_extremal, run_suite

        def body(out: Path) -> dict[str, Any]:
            g = self.settings.gronwall
            self._progress(f"Checking {g.draws} draws x {len(g.kernels)} kernels")
            report = run_suite(g.draws, g.kernels, seed=self.settings.seed,
                               horizon=g.horizon, dt=g.dt, max_depth=g.max_depth)
            for kind in g.kernels:
                kernel = MemoryKernel(kind=kind, rate=1.0)
                f = integrate_extremal(2.0, 1.0, 0.0, kernel, 1.0, g.horizon, g.dt)
                envelope = build_envelope(2.0, 1.0, kernel, g.horizon, g.dt, max_depth=g.max_depth)
                write_plot_data(
                    out / f"envelope-{kind}.txt",
                    f"envelope overlay ({kind} kernel)",
                    ["time", "extremal", "envelope"],
                    np.column_stack([f.times, f.values, envelope.values]),
                    alpha=2.0,
                    beta=1.0,
                )
            return report.to_dict()

        return self._run("gronwall", body)

    def toychain(self) -> RunResult:
        """Exponent spread of the self-repelling two-state chain."""
        from sidlab.toychain import ChainParams, exponent_spread

        def body(out: Path) -> dict[str, Any]:
            t = self.settings.toychain
            try:
                params = ChainParams(t.a01, t.a10, t.alpha, t.sigma_sq[-1])
            except ValueError as e:
                raise ConfigError(f"toychain: {e}") from e
            self._progress(f"Sampling {t.samples} exits at {len(t.sigma_sq)} noise levels")
            spread = exponent_spread(params, t.sigma_sq, t.samples, seed=self.settings.seed,
                                     window=t.window)
            edges, densities = spread.histogram()
            mids = 0.5 * (edges[1:] + edges[:-1])
            write_plot_data(
                out / "exponent-spread.txt",
                "exponent spread histogram",
                ["log_time_scaled", *(f"density_s2_{s:g}" for s in spread.sigma_sq)],
                np.column_stack([mids, *densities]),
                params=params.to_dict(),
            )
            return spread.to_dict()

        return self._run("toychain", body)

    def check(self) -> RunResult:
        """Assumption probes, invariance of the domain and memory vanishing."""
        from sidlab.model.probes import (
            check_fluctuation_dissipation,
            probe_dissipativity,
            probe_lipschitz,
        )
        from sidlab.quasipotential import kinetic_H

        def body(out: Path) -> dict[str, Any]:
            config, probe = self.config, self.settings.probe
            seed = self.settings.seed
            self._progress("Probing dissipativity")
            dissipativity = probe_dissipativity(config, probe.samples, probe.radius, seed=seed)
            kappa_z, kappa_w = probe_lipschitz(config, probe.samples, probe.radius, seed=seed)
            lam = self._lam()
            domain = build_domain(self.settings.domain, lam)
            self._progress("Checking zero-noise invariance of the domain")
            invariance = deterministic_invariance_check(
                config, domain, self.settings.integrator.horizon, self.settings.integrator, seed=seed
            )
            inward: dict[str, Any] = {"applicable": False}
            if isinstance(config.drift, KineticDrift):
                n = config.drift.potential.dim
                try:
                    kinetic_H(config.drift.potential, lam[:n], domain)
                    inward = {"applicable": True, "inward": True}
                except InwardFlowError as e:
                    inward = {"applicable": True, "inward": False,
                              "point": np.asarray(e.point).tolist(), "flux": e.flux}
            grid = np.linspace(1.0, 50.0, 50)
            masses = vanishing_memory(config.kernel, 1.0, grid)
            return {
                "dissipativity": dissipativity.to_dict(),
                "lipschitz": {"kappa_z": kappa_z, "kappa_w": kappa_w,
                              "sufficient": kappa_z + kappa_w < dissipativity.rho_self},
                "fluctuation_dissipation": check_fluctuation_dissipation(
                    config.drift, config.diffusion
                ).to_dict(),
                "invariance": invariance.to_dict(),
                "boundary_inward_flow": inward,
                "memory_vanishes": bool(np.all(np.diff(masses) <= 1e-12) and masses[-1] < 0.1),
                "predicted_h": predict_exponent(config, lam, domain),
            }

        return self._run("check", body)


def _fit_summary(result: ExitCampaignResult) -> dict[str, Any]:
    fit = result.fit
    return {
        "exponent": None if fit is None else fit.exponent,
        "exponent_ci": None if fit is None else list(fit.exponent_ci),
        "flagged": [] if fit is None else fit.flagged,
        "sigmas": result.sigmas,
    }


def _write_regression(path: Path, result: ExitCampaignResult) -> None:
    q = result.fit.prefactor_power if result.fit is not None else 0.0
    rows = [
        [1.0 / s.sigma**2, s.mean_log - q * np.log(s.sigma**2), s.stderr_log]
        for s in result.samples
    ]
    write_plot_data(path, "kramers regression", ["inv_sigma_sq", "mean_log_time", "stderr"], rows,
                    process=result.process, prefactor_power=q)


PLOT_SERIES = ("coupling gap", "envelope", "exponent spread", "kramers regression")


@dataclass
class CampaignReport:
    """Consolidated exit-exponent table plus the plot-ready series that came with it.

    ``series`` maps each series file in the bundle to the series it holds; the
    paths point into ``output`` when one was given, else at the inputs.
    """

    rows: list[ReportRow] = field(default_factory=list)
    series: dict[str, str] = field(default_factory=dict)
    output: Path | None = None


def _series_name(header: dict[str, Any]) -> str:
    series = str(header.get("series", ""))
    for known in PLOT_SERIES:
        if series.startswith(known):
            return known
    return series


def _bundle_name(path: Path) -> str:
    return f"{path.parent.name}-{path.name}" if path.parent.name else path.name


def _write_table(path: Path, rows: Sequence[ReportRow]) -> None:
    def value(x: float | bool | None) -> float:
        return math.nan if x is None else float(x)

    write_plot_data(
        path,
        "exit exponents",
        ["exponent", "ci_low", "ci_high", "predicted_h", "reference_l", "passed"],
        [
            [
                value(r.exponent),
                value(None if r.ci is None else r.ci[0]),
                value(None if r.ci is None else r.ci[1]),
                value(r.predicted),
                value(r.reference),
                value(r.passed),
            ]
            for r in rows
        ],
        files=[r.path for r in rows],
        processes=[r.process for r in rows],
    )


def report(
    paths: Sequence[str | Path],
    *,
    tolerance: float = 0.15,
    output: str | Path | None = None,
) -> CampaignReport:
    """Consolidate campaign results and plot-data files into one report.

    Campaign files give one table row each (Ĥ, CI, predicted H, L and the
    verdict). A row passes when the predicted exponent lies within
    ``tolerance`` (relative) of the fitted one or inside its confidence
    interval. Plot-data files written by ``couple``, ``gronwall`` and
    ``toychain`` runs join the bundle unchanged. With ``output`` the table,
    one regression series per campaign and copies of the plot-data files are
    written there.

    Raises:
        UsageError: If no campaign or plot-data file is given.
        ModelMismatchError: If the campaign files come from different models.
        FormatVersionError: If a file is not a sidlab result file of this version.
    """
    if not paths:
        raise UsageError("report needs at least one result file")
    campaigns: list[tuple[Path, ExitCampaignResult]] = []
    plots: list[tuple[Path, str]] = []
    for raw in paths:
        path = Path(raw)
        kind = sniff_kind(path)
        if kind == "campaign":
            campaigns.append((path, read_campaign(path)))
        elif kind == "plot":
            plots.append((path, _series_name(read_plot_data(path).header)))
        else:
            logger.info(f"Skipping {kind} file {path}")
    if not campaigns and not plots:
        raise UsageError("report found no campaign or plot-data files")
    hashes = {c.model_hash for _, c in campaigns}
    if len(hashes) > 1:
        raise ModelMismatchError(f"Result files come from different models: {sorted(hashes)}")

    target = None if output is None else Path(output)
    if target is not None:
        target.mkdir(parents=True, exist_ok=True)
    bundle = CampaignReport(output=target)

    for path, result in campaigns:
        fit = result.fit
        passed: bool | None = None
        if fit is not None and result.predicted_h is not None:
            low, high = fit.exponent_ci
            h = result.predicted_h
            passed = bool(low <= h <= high or abs(fit.exponent - h) <= tolerance * h)
        bundle.rows.append(
            ReportRow(
                path=str(path),
                process=result.process,
                exponent=None if fit is None else fit.exponent,
                ci=None if fit is None else fit.exponent_ci,
                predicted=result.predicted_h,
                reference=result.reference_l,
                passed=passed,
            )
        )
        if target is not None:
            regression = target / f"regression-{path.stem}.txt"
            _write_regression(regression, result)
            bundle.series[str(regression)] = "kramers regression"

    for path, series in plots:
        if target is None:
            bundle.series[str(path)] = series
            continue
        copy = target / _bundle_name(path)
        shutil.copyfile(path, copy)
        bundle.series[str(copy)] = series

    if target is not None and bundle.rows:
        _write_table(target / "exit-exponents.txt", bundle.rows)
    return bundle


def overlap_flags(rows: Sequence[ReportRow]) -> list[tuple[str, str, bool]]:
    """Pairwise confidence-interval overlap between fitted rows."""
    flags = []
    fitted = [r for r in rows if r.ci is not None]
    for i, a in enumerate(fitted):
        for b in fitted[i + 1 :]:
            assert a.ci is not None and b.ci is not None
            flags.append((a.path, b.path, bool(a.ci[0] <= b.ci[1] and b.ci[0] <= a.ci[1])))
    return flags

"""Command-line interface for sidlab."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any

import typer
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.syntax import Syntax
from rich.table import Table

from sidlab.errors import SidlabError
from sidlab.utils.logging import configure_logging, get_logger

if TYPE_CHECKING:
    from sidlab.config.settings import Settings
    from sidlab.lab import Lab, RunResult

app = typer.Typer(
    name="sidlab",
    help="Simulation laboratory for self-interacting diffusions",
    add_completion=False,
    rich_markup_mode="rich",
)

console = Console()
logger = get_logger("cli")

ConfigOption = Annotated[Path | None, typer.Option("--config", help="Path to a YAML config file")]
PresetOption = Annotated[str | None, typer.Option("--preset", "-p", help="Named model preset")]
SeedOption = Annotated[int | None, typer.Option("--seed", help="Campaign seed")]
WorkersOption = Annotated[
    int | None, typer.Option("--workers", "-j", help="Worker processes (default SIDLAB_WORKERS or 1)")
]
OutOption = Annotated[Path | None, typer.Option("--out", "-o", help="Output directory")]
OverrideOption = Annotated[
    list[str] | None,
    typer.Option("--override", "-O", help="Setting override key.path=value (repeatable)"),
]
VerboseOption = Annotated[bool, typer.Option("--verbose", help="Enable verbose output")]
DebugOption = Annotated[bool, typer.Option("--debug", help="Enable debug mode")]


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        from sidlab import __version__

        console.print(f"[bold blue]sidlab[/bold blue] version [green]{__version__}[/green]")
        raise typer.Exit()


@app.callback()
def main(
    version: Annotated[
        bool | None,
        typer.Option(
            "--version",
            "-v",
            help="Show version and exit",
            callback=version_callback,
            is_eager=True,
        ),
    ] = None,
) -> None:
    """sidlab - simulation laboratory for self-interacting diffusions.

    Simulate particle systems, find fixed points, run exit-time campaigns and
    compare them with quasi-potential predictions.
    """
    pass


def _load(
    config_file: Path | None,
    preset: str | None,
    seed: int | None,
    workers: int | None,
    out: Path | None,
    overrides: list[str] | None,
    verbose: bool,
    debug: bool,
) -> Settings:
    from sidlab.config.settings import load_settings

    settings = load_settings(
        config_file,
        preset=preset,
        overrides=overrides,
        seed=seed,
        workers=workers,
        output_dir=str(out) if out is not None else None,
        verbose=verbose or None,
        debug=debug or None,
    )
    configure_logging(
        log_file=settings.log_file,
        verbose=settings.verbose,
        debug=settings.debug,
        rich_console=True,
    )
    return settings


def _flatten(data: dict[str, Any], prefix: str = "") -> list[tuple[str, str]]:
    rows = []
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(_flatten(value, f"{name}."))
        elif isinstance(value, list) and len(value) > 8:
            rows.append((name, f"[{len(value)} values]"))
        elif isinstance(value, float):
            rows.append((name, f"{value:.6g}"))
        else:
            rows.append((name, str(value)))
    return rows


def _show_result(result: RunResult) -> None:
    table = Table(title=f"{result.command} summary", show_header=True)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    for key, value in _flatten(result.summary):
        table.add_row(key, value)
    console.print(table)
    console.print(
        Panel(
            f"[bold green]✓ {result.command} complete[/bold green]\n\n"
            f"Output: [blue]{result.output_dir}[/blue]\n"
            f"Artifacts: [yellow]{len(result.artifacts)}[/yellow]",
            title="[bold green]Complete[/bold green]",
            border_style="green",
        )
    )


def _execute(settings: Settings, label: str, action: Callable[[Lab], RunResult]) -> RunResult:
    """Run ``action`` under a spinner; sidlab errors print and exit with status 1."""
    from sidlab.lab import Lab

    try:
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
            transient=True,
        ) as progress:
            task = progress.add_task(f"{label}...", total=None)

            def update_spinner(msg: str) -> None:
                progress.update(task, description=msg)

            result = action(Lab(settings, progress_callback=update_spinner))
    except SidlabError as e:
        logger.debug(f"{label} failed", exc_info=True)
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(code=1) from e
    _show_result(result)
    return result


def _settings_or_exit(**kwargs: Any) -> Settings:
    try:
        return _load(**kwargs)
    except SidlabError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(code=1) from e


@app.command()
def simulate(
    frozen: Annotated[bool, typer.Option("--frozen", help="Simulate the frozen linear process")] = False,
    config_file: ConfigOption = None,
    preset: PresetOption = None,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    out: OutOption = None,
    override: OverrideOption = None,
    verbose: VerboseOption = False,
    debug: DebugOption = False,
) -> None:
    """Simulate the particle system and write its trajectory log.

    Example:
        sidlab simulate --preset overdamped-quadratic-interacting -O integrator.horizon=5
    """
    settings = _settings_or_exit(config_file=config_file, preset=preset, seed=seed, workers=workers,
                                 out=out, overrides=override, verbose=verbose, debug=debug)
    _execute(settings, "Simulating", lambda lab: lab.simulate(frozen=frozen))


@app.command()
def campaign(
    with_frozen: Annotated[
        bool, typer.Option("--with-frozen", help="Also run the frozen-process campaign")
    ] = False,
    config_file: ConfigOption = None,
    preset: PresetOption = None,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    out: OutOption = None,
    override: OverrideOption = None,
    verbose: VerboseOption = False,
    debug: DebugOption = False,
) -> None:
    """Run an exit-time campaign and fit the Kramers exponent.

    Example:
        sidlab campaign --preset overdamped-quadratic-interacting --workers 8
    """
    settings = _settings_or_exit(config_file=config_file, preset=preset, seed=seed, workers=workers,
                                 out=out, overrides=override, verbose=verbose, debug=debug)
    _execute(settings, "Running campaign", lambda lab: lab.campaign(with_frozen=with_frozen))


@app.command()
def couple(
    config_file: ConfigOption = None,
    preset: PresetOption = None,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    out: OutOption = None,
    override: OverrideOption = None,
    verbose: VerboseOption = False,
    debug: DebugOption = False,
) -> None:
    """Couple the particle system with its frozen process and check the gap inequalities."""
    settings = _settings_or_exit(config_file=config_file, preset=preset, seed=seed, workers=workers,
                                 out=out, overrides=override, verbose=verbose, debug=debug)
    _execute(settings, "Coupling", lambda lab: lab.couple())


@app.command(name="lambda")
def fixed_point(
    config_file: ConfigOption = None,
    preset: PresetOption = None,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    out: OutOption = None,
    override: OverrideOption = None,
    verbose: VerboseOption = False,
    debug: DebugOption = False,
) -> None:
    """Find the self-consistent fixed point λ.

    Example:
        sidlab lambda --preset kinetic-quadratic
    """
    settings = _settings_or_exit(config_file=config_file, preset=preset, seed=seed, workers=workers,
                                 out=out, overrides=override, verbose=verbose, debug=debug)
    _execute(settings, "Solving for lambda", lambda lab: lab.fixed_point())


@app.command()
def quasipotential(
    config_file: ConfigOption = None,
    preset: PresetOption = None,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    out: OutOption = None,
    override: OverrideOption = None,
    verbose: VerboseOption = False,
    debug: DebugOption = False,
) -> None:
    """Predict the exit exponent from closed forms and minimized actions."""
    settings = _settings_or_exit(config_file=config_file, preset=preset, seed=seed, workers=workers,
                                 out=out, overrides=override, verbose=verbose, debug=debug)
    _execute(settings, "Computing exit costs", lambda lab: lab.quasipotential())


@app.command()
def gronwall(
    config_file: ConfigOption = None,
    preset: PresetOption = None,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    out: OutOption = None,
    override: OverrideOption = None,
    verbose: VerboseOption = False,
    debug: DebugOption = False,
) -> None:
    """Check memory-Gronwall envelopes on random parameter draws."""
    settings = _settings_or_exit(config_file=config_file, preset=preset, seed=seed, workers=workers,
                                 out=out, overrides=override, verbose=verbose, debug=debug)
    _execute(settings, "Building envelopes", lambda lab: lab.gronwall())


@app.command()
def toychain(
    config_file: ConfigOption = None,
    preset: PresetOption = None,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    out: OutOption = None,
    override: OverrideOption = None,
    verbose: VerboseOption = False,
    debug: DebugOption = False,
) -> None:
    """Sample exit times of the self-repelling two-state chain.

    Example:
        sidlab toychain -O toychain.alpha=0.0
    """
    settings = _settings_or_exit(config_file=config_file, preset=preset, seed=seed, workers=workers,
                                 out=out, overrides=override, verbose=verbose, debug=debug)
    _execute(settings, "Sampling exit times", lambda lab: lab.toychain())


@app.command()
def check(
    config_file: ConfigOption = None,
    preset: PresetOption = None,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    out: OutOption = None,
    override: OverrideOption = None,
    verbose: VerboseOption = False,
    debug: DebugOption = False,
) -> None:
    """Probe the model assumptions and the exit domain."""
    settings = _settings_or_exit(config_file=config_file, preset=preset, seed=seed, workers=workers,
                                 out=out, overrides=override, verbose=verbose, debug=debug)
    _execute(settings, "Probing assumptions", lambda lab: lab.check())


@app.command()
def rerun(
    manifest: Annotated[Path, typer.Argument(help="Manifest of the run to repeat")],
    out: OutOption = None,
    verbose: VerboseOption = False,
) -> None:
    """Repeat a run from its manifest with identical settings."""
    from sidlab.formatters.records import read_manifest
    from sidlab.lab import Lab

    configure_logging(verbose=verbose, rich_console=True)
    try:
        recorded = read_manifest(manifest)
        command = recorded["command"]
        summary = recorded.get("summary") or {}
        settings = Lab.from_manifest(manifest).settings
    except (SidlabError, KeyError, OSError) as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(code=1) from e
    if out is not None:
        settings = settings.model_copy(update={"output_dir": str(out)})
    actions: dict[str, Callable[[Lab], RunResult]] = {
        "simulate": lambda lab: lab.simulate(frozen=bool(summary.get("frozen", False))),
        "campaign": lambda lab: lab.campaign(with_frozen=len(summary.get("campaigns", {})) > 1),
        "couple": lambda lab: lab.couple(),
        "lambda": lambda lab: lab.fixed_point(),
        "quasipotential": lambda lab: lab.quasipotential(),
        "gronwall": lambda lab: lab.gronwall(),
        "toychain": lambda lab: lab.toychain(),
        "check": lambda lab: lab.check(),
    }
    if command not in actions:
        console.print(f"[bold red]Error:[/bold red] Unknown command in manifest: {command}")
        raise typer.Exit(code=1)
    _execute(settings, f"Repeating {command}", actions[command])


@app.command()
def report(
    paths: Annotated[list[Path] | None, typer.Argument(help="Campaign result and plot-data files")] = None,
    tolerance: Annotated[
        float, typer.Option("--tolerance", help="Relative tolerance against the predicted H")
    ] = 0.15,
    out: OutOption = None,
) -> None:
    """Consolidate campaign results into one table and bundle plot-ready series.

    Example:
        sidlab report runs/campaign-*/campaign-*.txt runs/gronwall-*/envelope-*.txt --out runs/report
    """
    from sidlab.lab import overlap_flags
    from sidlab.lab import report as build_report

    try:
        bundle = build_report(paths or [], tolerance=tolerance, output=out)
    except SidlabError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(code=1) from e

    def fmt(value: float | None) -> str:
        return "-" if value is None else f"{value:.4g}"

    if bundle.rows:
        table = Table(title="Exit exponents", show_header=True)
        table.add_column("File", style="cyan")
        table.add_column("Process")
        table.add_column("Ĥ", style="green")
        table.add_column("95% CI")
        table.add_column("Predicted H", style="yellow")
        table.add_column("L", style="yellow")
        table.add_column("Pass")
        for row in bundle.rows:
            ci = "-" if row.ci is None else f"[{row.ci[0]:.4g}, {row.ci[1]:.4g}]"
            verdict = {True: "[green]yes[/green]", False: "[red]no[/red]", None: "-"}[row.passed]
            table.add_row(
                Path(row.path).name, row.process, fmt(row.exponent), ci,
                fmt(row.predicted), fmt(row.reference), verdict,
            )
        console.print(table)

    for a, b, overlap in overlap_flags(bundle.rows):
        state = "overlap" if overlap else "[bold]separated[/bold]"
        console.print(f"[dim]{Path(a).name} vs {Path(b).name}:[/dim] {state}")

    if bundle.series:
        series = Table(title="Plot series", show_header=True)
        series.add_column("File", style="cyan")
        series.add_column("Series")
        for path, name in bundle.series.items():
            series.add_row(Path(path).name, name)
        console.print(series)
    if bundle.output is not None:
        console.print(f"Report written to [blue]{bundle.output}[/blue]")


@app.command()
def presets() -> None:
    """List the registered model presets."""
    from sidlab.config.presets import get_preset, list_presets

    table = Table(title="Presets", show_header=True)
    table.add_column("Name", style="cyan")
    table.add_column("Drift")
    table.add_column("Interaction")
    table.add_column("Kernel")
    for name in list_presets():
        model = get_preset(name).get("model", {})
        table.add_row(
            name,
            model.get("drift", {}).get("family", "overdamped"),
            model.get("interaction", {}).get("family", "zero"),
            model.get("kernel", {}).get("kind", "dirac"),
        )
    console.print(table)


@app.command(name="config")
def show_config(
    init: Annotated[
        bool,
        typer.Option("--init", "-i", help="Create a new config file"),
    ] = False,
    path: Annotated[
        Path,
        typer.Option("--path", help="Config file path for init"),
    ] = Path("sidlab.yaml"),
    config_file: ConfigOption = None,
    preset: PresetOption = None,
    override: OverrideOption = None,
) -> None:
    """Show the effective configuration or write a default config file.

    Example:
        sidlab config --preset kinetic-quadratic
        sidlab config --init --path my-config.yaml
    """
    from sidlab.config.settings import Settings, load_settings

    if init:
        Settings().save_to_file(path)
        console.print(f"[green]Config file created:[/green] {path}")
        return

    try:
        settings = load_settings(config_file, preset=preset, overrides=override)
    except SidlabError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(code=1) from e
    console.print(Syntax(settings.to_yaml(), "yaml", theme="ansi_dark"))


if __name__ == "__main__":
    app()

# app/interfaces/cli/v1/commands/enskog/simulation_commands.py

import json
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table

from app.application.use_cases.enskog.simulation_use_cases import load_config
from app.core.config import settings
from app.core.exceptions.exceptions import ExitCode
from app.interfaces.cli.v1.dependencies import get_diagnostics_use_cases, get_simulation_use_cases
from app.interfaces.cli.v1.errors import exit_on_app_error

# command output (tables, JSON) goes to stdout; logs go to stderr
out = Console()


def _resolve_out_dir(option: Optional[Path], configured: Optional[str], seed: int, command: str) -> Path:
    if option is not None:
        return option
    if configured:
        return Path(configured)
    base = Path(settings.DEFAULT_OUT_DIR) if settings.DEFAULT_OUT_DIR else Path("runs")
    return base / f"{command}-seed{seed}"


def simulate(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Flat key=value run configuration"),
    manifest: Optional[Path] = typer.Option(None, "--manifest", help="Replay a previous run from its manifest.json"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", "-o", help="Output directory"),
    frozen_law: Optional[Path] = typer.Option(None, "--frozen-law", help="ENSK1 frozen_paths ensemble (mode=frozen)"),
):
    """Run the particle system and write ENSK1 snapshots, events.csv and manifest.json."""
    if config is not None and manifest is not None:
        raise typer.BadParameter("use either --config or --manifest, not both")
    use_cases = get_simulation_use_cases()
    with exit_on_app_error():
        if manifest is not None:
            _, schema = use_cases.load_manifest(manifest)
            target = _resolve_out_dir(out_dir, schema.out_dir, schema.seed, "simulate")
            result = use_cases.replay(manifest, target)
        else:
            schema = load_config(config)
            target = _resolve_out_dir(out_dir, schema.out_dir, schema.seed, "simulate")
            result = use_cases.simulate(schema, target, frozen_law)

    table = Table(title=f"simulate -> {target}")
    table.add_column("key")
    table.add_column("value", justify="right")
    for key, value in result.event_counts.items():
        table.add_row(key, str(value))
    table.add_row("seed", str(result.seeds.get("master_seed")))
    table.add_row("files", str(len(result.output_files)))
    out.print(table)


def picard(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Flat key=value run configuration"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", "-o", help="Output directory"),
):
    """Iterate frozen-law simulations until successive laws agree to picard.tol."""
    with exit_on_app_error():
        schema = load_config(config)
        target = _resolve_out_dir(out_dir, schema.out_dir, schema.seed, "picard")
        trajectory = get_simulation_use_cases().picard(schema, target)

    table = Table(title=f"picard -> {target} (noise floor {trajectory.noise_floor:.4g}, tol {trajectory.tol:.4g})")
    table.add_column("n", justify="right")
    table.add_column("max distance", justify="right")
    table.add_column("sup E|Z|^2", justify="right")
    for state in trajectory.states:
        distance = "-" if state.distance_to_previous is None else f"{state.max_distance:.4g}"
        table.add_row(str(state.index), distance, f"{state.sup_moment2:.4g}")
    out.print(table)
    out.print("converged" if trajectory.converged else "[yellow]not converged[/yellow]")


def diagnose(
    run_dir: Path = typer.Option(..., "--run-dir", help="Directory written by simulate"),
    compare_run: Optional[Path] = typer.Option(None, "--compare-run", help="Second run of the same config"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", "-o", help="Where to write the reports"),
    samples: int = typer.Option(100_000, "--samples", min=10_000, help="Draws for the collision symmetry check"),
    pair_samples: int = typer.Option(100_000, "--pair-samples", min=1, help="Pairs for the generator term"),
    strict: bool = typer.Option(False, "--strict", help="Exit 1 when any check fails"),
):
    """Run the diagnostics suite over a stored run."""
    with exit_on_app_error():
        reports = get_diagnostics_use_cases().diagnose(run_dir, compare_run, out_dir, samples, pair_samples)

    table = Table(title=f"diagnostics for {run_dir}")
    for column in ("check", "statistic", "threshold", "result"):
        table.add_column(column)
    for r in reports:
        verdict = "[green]pass[/green]" if r.passed else "[red]FAIL[/red]"
        table.add_row(r.name, f"{r.statistic:.4g}", f"{r.threshold:.4g}", verdict)
    out.print(table)
    if strict and not all(r.passed for r in reports):
        raise typer.Exit(code=int(ExitCode.VALIDATION))


def validate(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Flat key=value run configuration"),
):
    """Check the kernel hypotheses of a configuration; exit 1 iff any fails."""
    with exit_on_app_error():
        report = get_simulation_use_cases().validate(load_config(config))
    typer.echo(json.dumps(report.as_dict(), default=str))
    if not report.passed:
        raise typer.Exit(code=int(ExitCode.VALIDATION))

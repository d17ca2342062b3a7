#!/usr/bin/env python3
"""
schro-reg CLI - kernels, spectra, regulator synthesis and closed-loop runs from a scenario.

Usage: schro-reg <mode> --config <path> --out <dir> [--n-cells N] [--dt X] [--horizon T]

Exit codes: 0 success, 1 verification failures or unexpected errors, 2 invalid scenario,
3 solvability or observer-design failure, 4 simulation divergence.

Artifacts (inside --out):
    kernels     kernel_{k,K,p,P}.csv (x,xi,re,im), kernel_traces.csv, kernels_report.json
    spectrum    spectrum.csv, probe.csv, spectrum_summary.json
    regulate    gains.json, state_feedback.csv, state_feedback_profiles.csv, e_y.svg,
                regulate_report.json
    observe     gains.json, observer.csv, observer_errors.svg, observe_report.json
    closedloop  gains.json, closedloop.csv, e_y.svg, closedloop_report.json
    verify      report.json

Time-series CSVs start with t and keep the recording order of the columns; complex columns
are split into <name>_re,<name>_im. Numbers carry 17 significant digits.
"""

import sys
import time
from pathlib import Path
from typing import Any, Optional, Sequence

import click
from loguru import logger

from schro_reg import __version__
from schro_reg.utils import format_duration, path_with_tilde, setup_logging

MODES = ("kernels", "spectrum", "regulate", "observe", "closedloop", "verify")


def _summary_rows(report: dict[str, Any]) -> list[list[str]]:
    rows = []
    for key, value in report.items():
        if isinstance(value, bool):
            rows.append([key, "yes" if value else "no"])
        elif isinstance(value, float):
            rows.append([key, f"{value:.6g}"])
        elif isinstance(value, complex):
            rows.append([key, f"{value.real:.6g}{value.imag:+.6g}i"])
        elif isinstance(value, (int, str)):
            rows.append([key, str(value)])
        elif isinstance(value, list) and all(isinstance(v, int) for v in value):
            rows.append([key, ", ".join(map(str, value)) or "-"])
    return rows


def run(
    config_path: Optional[Path],
    mode: Optional[str],
    output_dir: Path,
    n_cells: Optional[int] = None,
    dt: Optional[float] = None,
    horizon: Optional[float] = None,
    gains_path: Optional[Path] = None,
    only: Optional[Sequence[int]] = None,
) -> int:
    """
    Load a scenario, dispatch one mode and write its artifacts.

    Args:
        config_path: Scenario file (None runs the reference scenario)
        mode: Mode name; None falls back to the scenario's mode field
        output_dir: Artifact directory
        n_cells: Override for numerics.n_cells
        dt: Override for numerics.dt
        horizon: Override for numerics.horizon
        gains_path: Reuse a gains.json instead of assembling gains
        only: Criterion ids for the verify mode

    Returns:
        Process exit code
    """
    from tabulate import tabulate

    from schro_reg.config_loader import ScenarioLoader
    from schro_reg.errors import RegulatorError
    from schro_reg.modes import MODE_HANDLERS, ScenarioContext

    try:
        scenario = ScenarioLoader(config_path).load().with_numerics(n_cells, dt, horizon)
        if scenario.logging.level != "INFO" or scenario.logging.path is not None:
            setup_logging(scenario.logging.level, scenario.logging.path)
        if mode is None and scenario.mode is not None:
            mode = scenario.mode.value
        if mode not in MODE_HANDLERS:
            raise click.UsageError(f"Unknown or missing mode {mode!r}; choose from {', '.join(MODES)}")

        ctx = ScenarioContext.build(scenario, gains_path=gains_path)
        output_dir.mkdir(parents=True, exist_ok=True)
        started = time.perf_counter()
        if mode == "verify":
            report = MODE_HANDLERS["verify"](ctx, output_dir, only)
        else:
            report = MODE_HANDLERS[mode](ctx, output_dir)
        elapsed = format_duration(time.perf_counter() - started)

        click.echo("\n" + click.style(f"{mode} ({scenario.name}):", bold=True))
        click.echo(tabulate(_summary_rows(report), headers=["Quantity", "Value"], tablefmt="simple"))
        click.echo(f"\nArtifacts: {path_with_tilde(output_dir)} ({elapsed})")

        if mode == "verify" and report["exit_hint"] != 0:
            click.echo(
                click.style(f"✗ Failed criteria: {', '.join(map(str, report['failed']))}", fg="red"),
                err=True,
            )
            return 1
        return 0

    except click.UsageError:
        raise
    except RegulatorError as e:
        click.echo(click.style(f"✗ {type(e).__name__}: {e}", fg="red"), err=True)
        logger.debug(f"{mode} failed with exit code {e.exit_code}")
        return e.exit_code
    except Exception as e:
        click.echo(click.style(f"✗ {mode} failed: {e}", fg="red"), err=True)
        logger.exception(f"{mode} failed")
        return 1


def scenario_options(func):
    """Options shared by every mode command."""
    options = [
        click.option(
            "--config",
            "config_path",
            type=click.Path(dir_okay=False, path_type=Path),
            help="Scenario file, YAML or JSON (default: reference scenario)",
        ),
        click.option(
            "--out",
            "output_dir",
            type=click.Path(file_okay=False, path_type=Path),
            default=Path("out"),
            show_default=True,
            help="Artifact directory",
        ),
        click.option("--n-cells", type=int, help="Override numerics.n_cells"),
        click.option("--dt", type=float, help="Override numerics.dt"),
        click.option("--horizon", type=float, help="Override numerics.horizon"),
        click.option(
            "--gains",
            "gains_path",
            type=click.Path(dir_okay=False, path_type=Path),
            help="Reuse a gains.json from an earlier run",
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.version_option(version=__version__, prog_name="schro-reg")
def cli():
    """schro-reg - Backstepping output regulation for a boundary-controlled Schrödinger equation."""
    setup_logging()


@cli.command("run")
@click.option("--mode", type=click.Choice(MODES), help="Mode (default: the scenario's mode)")
@scenario_options
def run_command(mode, config_path, output_dir, n_cells, dt, horizon, gains_path):
    """Run the mode named by --mode or by the scenario."""
    sys.exit(run(config_path, mode, output_dir, n_cells, dt, horizon, gains_path))


@cli.command()
@scenario_options
def kernels(config_path, output_dir, n_cells, dt, horizon, gains_path):
    """Solve the control and observer kernels and their reciprocals."""
    sys.exit(run(config_path, "kernels", output_dir, n_cells, dt, horizon, gains_path))


@cli.command()
@scenario_options
def spectrum(config_path, output_dir, n_cells, dt, horizon, gains_path):
    """Eigenvalues of the open-loop generator, observer spectrum and properness probe."""
    sys.exit(run(config_path, "spectrum", output_dir, n_cells, dt, horizon, gains_path))


@cli.command()
@scenario_options
def regulate(config_path, output_dir, n_cells, dt, horizon, gains_path):
    """State-feedback regulation run with decay fit."""
    sys.exit(run(config_path, "regulate", output_dir, n_cells, dt, horizon, gains_path))


@cli.command()
@scenario_options
def observe(config_path, output_dir, n_cells, dt, horizon, gains_path):
    """Observer run against the open-loop plant."""
    sys.exit(run(config_path, "observe", output_dir, n_cells, dt, horizon, gains_path))


@cli.command()
@scenario_options
def closedloop(config_path, output_dir, n_cells, dt, horizon, gains_path):
    """Output-feedback regulation run with weighted-norm report."""
    sys.exit(run(config_path, "closedloop", output_dir, n_cells, dt, horizon, gains_path))


@cli.command()
@click.option(
    "--only", type=str, help="Comma-separated criterion ids to run (default: all twelve)"
)
@scenario_options
def verify(only, config_path, output_dir, n_cells, dt, horizon, gains_path):
    """Run the acceptance suite and write report.json."""
    selected = None
    if only:
        try:
            selected = [int(part) for part in only.split(",") if part.strip()]
        except ValueError:
            raise click.BadParameter(f"not a list of integers: {only}", param_hint="--only")
    sys.exit(run(config_path, "verify", output_dir, n_cells, dt, horizon, gains_path, selected))


@cli.group()
def config():
    """Inspect and create scenario files."""
    pass


@config.command("show")
@click.option(
    "--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), help="Scenario file"
)
def config_show(config_path):
    """Show the scenario (default: reference scenario)."""
    try:
        from tabulate import tabulate

        from schro_reg.config_loader import ScenarioLoader

        scenario = ScenarioLoader(config_path).load()
        E = scenario.build_exosystem()
        poles_r, poles_d = scenario.poles(E)
        n = scenario.numerics

        config_data = [
            ["Name", scenario.name],
            ["Mode", scenario.mode.value if scenario.mode else "-"],
            ["q", scenario.plant.q],
            ["h", scenario.plant.h],
            ["g", scenario.plant.g],
            ["n_d / n_r", f"{E.n_d} / {E.n_r}"],
            ["Observation", f"theta={scenario.observation.theta} at x0={scenario.observation.x0}"],
            ["c_s / c_o", f"{scenario.tuning.c_s} / {scenario.tuning.c_o}"],
            ["Poles r", ", ".join(f"{complex(p):g}" for p in poles_r)],
            ["Poles d", ", ".join(f"{complex(p):g}" for p in poles_d)],
            ["Grid", f"{n.n_cells} cells"],
            ["dt / horizon", f"{n.dt:g} / {n.horizon:g}"],
            ["Log Level", scenario.logging.level],
        ]

        click.echo("\n" + click.style("Scenario:", bold=True))
        click.echo(tabulate(config_data, headers=["Setting", "Value"], tablefmt="simple"))
        if config_path is None:
            click.echo(click.style("\nNote: reference scenario (no --config given)", fg="yellow"))
        else:
            click.echo(f"\nScenario file: {path_with_tilde(config_path)}")

    except Exception as e:
        click.echo(click.style(f"Error loading scenario: {e}", fg="red"), err=True)
        code = getattr(e, "exit_code", 1)
        sys.exit(code)


@config.command("init")
@click.argument("path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--force", is_flag=True, help="Overwrite an existing file")
def config_init(path: Path, force: bool):
    """Write the reference scenario with inline comments to PATH."""
    try:
        from schro_reg.config_loader import ScenarioLoader

        if path.exists() and not force:
            click.echo(click.style(f"{path} exists (use --force to overwrite)", fg="yellow"), err=True)
            sys.exit(1)
        loader = ScenarioLoader(path)
        loader.save(loader.reference())
        click.echo(click.style(f"✓ Reference scenario written to {path_with_tilde(path)}", fg="green"))
    except Exception as e:
        click.echo(click.style(f"Error writing scenario: {e}", fg="red"), err=True)
        sys.exit(1)


if __name__ == "__main__":
    cli()

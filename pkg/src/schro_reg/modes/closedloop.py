"""
closedloop mode: output-feedback regulation from a generic initialization.
"""

from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from schro_reg.helpers.export import save_gains, write_json, write_series_csv
from schro_reg.helpers.plotting import emit_plot
from schro_reg.modes.context import ScenarioContext
from schro_reg.sim import (
    boundedness,
    decay_fit,
    observer_initial_error,
    simulate_output_feedback,
    target_initial_state,
    weighted_error_norm,
)

NORM_COLUMNS = [
    "norm_z",
    "norm_z_hat",
    "norm_z_tilde",
    "norm_w_tilde",
    "norm_v_tilde",
    "norm_e_tilde",
]


def run_closed_loop(ctx: ScenarioContext, horizon: float | None = None):
    """Output-feedback run from the scenario's initial data."""
    gains = ctx.gains
    E = ctx.exosystem
    initial = ctx.scenario.initial
    w_error = ctx.scenario.w_hat_error(E)
    z0 = target_initial_state(gains, ctx.w0, initial.v_coefficients)
    zhat0 = z0 + observer_initial_error(gains, w_error[: E.n_d], initial.e_coefficients)
    return simulate_output_feedback(
        ctx.plant, E, gains, ctx.observation, ctx.sim_config(horizon=horizon), z0, zhat0,
        ctx.w0 + w_error,
    )


def summarize(series, horizon: float) -> dict[str, Any]:
    """Decay fit on the second half, peak and terminal |e_y|, boundedness, weighted norm."""
    e_y = series.magnitude("e_y")
    M, mu, r2 = decay_fit(series.times, e_y, (0.5 * horizon, horizon))
    flags = boundedness(series, NORM_COLUMNS)
    alpha = -mu / 2
    return {
        "fit_amplitude": M,
        "fit_rate": mu,
        "fit_r2": r2,
        "peak_e_y": float(np.max(e_y)),
        "terminal_e_y": float(e_y[-1]),
        "terminal_to_peak": float(e_y[-1] / np.max(e_y)) if np.max(e_y) > 0 else 0.0,
        "alpha": alpha,
        "weighted_norm": weighted_error_norm(series, alpha),
        "bounded": all(flags.values()),
        "bounded_columns": flags,
    }


def handle_closedloop(ctx: ScenarioContext, out: Path) -> dict[str, Any]:
    """
    Write gains.json, closedloop.csv, e_y.svg and closedloop_report.json.

    Returns:
        The report written to closedloop_report.json
    """
    save_gains(ctx.gains, out / "gains.json")
    horizon = ctx.scenario.numerics.horizon
    series = run_closed_loop(ctx)
    write_series_csv(series, out / "closedloop.csv")
    emit_plot(series, ["e_y"], out / "e_y.svg", log_scale=True, title="output feedback")

    report = {"scenario": ctx.scenario.name, "horizon": horizon, **summarize(series, horizon)}
    write_json(report, out / "closedloop_report.json")
    logger.info(f"Closed-loop artifacts written to {out}")
    return report

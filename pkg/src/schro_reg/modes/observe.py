"""
observe mode: observer run against the open-loop plant.
"""

from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from schro_reg.helpers.export import save_gains, write_json, write_series_csv
from schro_reg.helpers.plotting import emit_plot
from schro_reg.modes.context import ScenarioContext
from schro_reg.sim import (
    decay_fit,
    max_ratio_deviation,
    observer_initial_error,
    open_loop_initial_state,
    simulate_observer,
)

ERROR_COLUMNS = ["norm_z_tilde", "norm_e_tilde", "norm_w_tilde_d", "norm_w_tilde_r"]


def handle_observe(ctx: ScenarioContext, out: Path) -> dict[str, Any]:
    """
    Write gains.json, observer.csv, observer_errors.svg and observe_report.json.

    The plant runs open loop with u = 0 over numerics.observer_horizon.

    Returns:
        The report written to observe_report.json
    """
    gains = ctx.gains
    save_gains(gains, out / "gains.json")
    E = ctx.exosystem
    horizon = min(ctx.scenario.numerics.observer_horizon, ctx.scenario.numerics.horizon)
    cfg = ctx.sim_config(horizon=horizon)

    w_error = ctx.scenario.w_hat_error(E)
    z0 = open_loop_initial_state(ctx.grid, E.p2 @ ctx.w0)
    zhat0 = z0 + observer_initial_error(
        gains, w_error[: E.n_d], ctx.scenario.initial.e_coefficients
    )
    series = simulate_observer(
        ctx.plant, E, gains, lambda t: 0.0, cfg, z0, zhat0, ctx.w0 + w_error
    )
    write_series_csv(series, out / "observer.csv")
    emit_plot(series, ERROR_COLUMNS, out / "observer_errors.svg", log_scale=True, title="observer")

    c_o = ctx.scenario.tuning.c_o
    poles_r, _ = ctx.scenario.poles(E)
    slowest = -max(complex(p).real for p in poles_r) if poles_r else float("nan")
    report: dict[str, Any] = {
        "scenario": ctx.scenario.name,
        "c_o": c_o,
        "horizon": horizon,
        "initial_e_tilde": float(series.magnitude("norm_e_tilde")[0]),
        "terminal_e_tilde": float(series.magnitude("norm_e_tilde")[-1]),
        "slowest_pole_rate": slowest,
    }
    if c_o > 0 and series.magnitude("norm_e_tilde")[0] > 0:
        report["e_tilde_ratio_deviation"] = max_ratio_deviation(
            series.times, series.magnitude("norm_e_tilde"), c_o, min(3.0 / c_o, horizon)
        )
    if E.n_r and np.any(w_error[E.n_d :]):
        _, rate, r2 = decay_fit(
            series.times, series.magnitude("norm_w_tilde_r"), (0.5 * horizon, horizon)
        )
        report["w_tilde_r_rate"] = rate
        report["w_tilde_r_fit_r2"] = r2
    write_json(report, out / "observe_report.json")
    logger.info(f"Observer artifacts written to {out}")
    return report

"""
regulate mode: state-feedback loop from compatible initial data, with its decay fit.
"""

from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from schro_reg.helpers.export import (
    save_gains,
    write_json,
    write_profiles_csv,
    write_series_csv,
)
from schro_reg.helpers.plotting import emit_plot
from schro_reg.modes.context import ScenarioContext
from schro_reg.regulator import regulator_residuals
from schro_reg.sim import decay_fit, simulate_state_feedback, target_initial_state


def handle_regulate(ctx: ScenarioContext, out: Path) -> dict[str, Any]:
    """
    Write gains.json, state_feedback.csv, state_feedback_profiles.csv, e_y.svg and
    regulate_report.json.

    Returns:
        The report written to regulate_report.json
    """
    gains = ctx.gains
    save_gains(gains, out / "gains.json")
    horizon = ctx.scenario.numerics.horizon
    cfg = ctx.sim_config(snapshot_every=ctx.snapshot_stride(horizon))
    z0 = target_initial_state(gains, ctx.w0, ctx.scenario.initial.v_coefficients)

    series = simulate_state_feedback(ctx.plant, ctx.exosystem, gains, ctx.observation, z0, cfg)
    write_series_csv(series, out / "state_feedback.csv")
    write_profiles_csv(series, out / "state_feedback_profiles.csv")
    emit_plot(series, ["e_y"], out / "e_y.svg", log_scale=True, title="state feedback")

    c_s = ctx.scenario.tuning.c_s
    M, mu, r2 = decay_fit(series.times, series.magnitude("e_y"), (0.5 * horizon, horizon))
    v_norm = series.magnitude("norm_v_tilde")
    _, mu_v, _ = decay_fit(series.times, v_norm, (0.0, min(horizon, 3.0 / max(c_s, 1e-12))))
    residuals = regulator_residuals(ctx.plant, ctx.exosystem, ctx.observation, gains)
    e_y = series.magnitude("e_y")
    report = {
        "scenario": ctx.scenario.name,
        "c_s": c_s,
        "fit_amplitude": M,
        "fit_rate": mu,
        "fit_r2": r2,
        "v_tilde_rate": mu_v,
        "rate_gap": abs(mu_v - c_s) / c_s if c_s > 0 else float("nan"),
        "peak_e_y": float(np.max(e_y)),
        "terminal_e_y": float(e_y[-1]),
        "k11": gains.k11,
        "m_w": [complex(v) for v in gains.m_w],
        "regulator_residual": residuals.worst_closed_form,
        "m_nonlocal_residual": residuals.m_nonlocal,
        "m_w_gap": residuals.m_w_gap,
        "regulator_fd_within_bound": residuals.finite_difference_ok,
    }
    write_json(report, out / "regulate_report.json")
    logger.info(f"Regulation artifacts written to {out}")
    return report

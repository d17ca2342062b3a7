"""
kernels mode: solve the four kernels and report their residuals.
"""

from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from schro_reg.helpers.export import write_json, write_kernel_csv, write_rows_csv
from schro_reg.kernels import (
    apply_forward,
    apply_inverse,
    apply_observer_forward,
    apply_observer_inverse,
    boundary_residual,
    kernel_feedback_trace,
    kernel_residual,
    observer_feedback_trace,
)
from schro_reg.modes.context import ScenarioContext
from schro_reg.sim import cosine_profile


def roundtrip_errors(ctx: ScenarioContext) -> tuple[float, float]:
    """sup |F^{-1} F z - z| and sup |F_o^{-1} F_o e - e| on a smooth test profile."""
    ks = ctx.kernels
    z = cosine_profile(ctx.grid, [0.3, 1.0, 0.5j, 0.25])
    forward = apply_inverse(ks.K, apply_forward(ks.k, z)).sup_distance(z)
    observer = apply_observer_inverse(ks.P, apply_observer_forward(ks.p, z)).sup_distance(z)
    return forward, observer


def handle_kernels(ctx: ScenarioContext, out: Path) -> dict[str, Any]:
    """
    Write kernel_{k,K,p,P}.csv, kernel_traces.csv and kernels_report.json.

    Returns:
        The report written to kernels_report.json
    """
    ks = ctx.kernels
    tuning = ctx.scenario.tuning
    for name in ("k", "K", "p", "P"):
        write_kernel_csv(getattr(ks, name), out / f"kernel_{name}.csv")

    k11, kx1 = kernel_feedback_trace(ks.k)
    l0, p_xi = observer_feedback_trace(ks.p)
    write_rows_csv(
        out / "kernel_traces.csv",
        ["x", "k_x1", "k_diag", "p_xi1", "p_diag"],
        [ctx.grid.nodes, kx1.values, ks.k.diagonal, p_xi.values, ks.p.diagonal],
    )

    forward_error, observer_error = roundtrip_errors(ctx)
    h = ctx.grid.spacing
    report = {
        "scenario": ctx.scenario.name,
        "n_cells": ctx.grid.n_cells,
        "k11": k11,
        "p11": l0,
        "control_residual": kernel_residual(ks.k, ctx.plant, tuning.c_s, "control"),
        "observer_residual": kernel_residual(ks.p, ctx.plant, tuning.c_o, "observer"),
        "boundary_residual": boundary_residual(ks.k, ctx.plant.q),
        "roundtrip_error": forward_error,
        "observer_roundtrip_error": observer_error,
        "roundtrip_bound": 10 * h**2,
        "max_abs_k": float(np.max(np.abs(ks.k.values))),
    }
    write_json(report, out / "kernels_report.json")
    logger.info(f"Kernel artifacts written to {out}")
    return report

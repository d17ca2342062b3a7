"""
spectrum mode: eigenvalues of A, their asymptotics, the observer error spectrum and the
strict-properness probe.
"""

from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from schro_reg.helpers.export import write_json, write_rows_csv
from schro_reg.modes.context import ScenarioContext
from schro_reg.spectral import (
    asymptotics_report,
    eigenvalues_A,
    observer_error_spectrum,
    strict_properness_probe,
)

PROBE_S_VALUES = (50.0, 100.0, 200.0, 400.0, 800.0)
OBSERVER_MODES = 50


def handle_spectrum(ctx: ScenarioContext, out: Path) -> dict[str, Any]:
    """
    Write spectrum.csv, probe.csv and spectrum_summary.json.

    Returns:
        The summary written to spectrum_summary.json
    """
    q = ctx.plant.q
    count = ctx.scenario.numerics.spectrum_count
    pairs = eigenvalues_A(q, count, tol=ctx.settings.newton_tol)
    table = asymptotics_report(pairs, q)
    deviation = {row.n: row.deviation for row in table.rows}
    write_rows_csv(
        out / "spectrum.csv",
        ["n", "re_lambda", "im_lambda", "re_mu", "im_mu", "residual", "deviation"],
        [
            np.array([p.index for p in pairs], dtype=float),
            np.array([p.root.real for p in pairs]),
            np.array([p.root.imag for p in pairs]),
            np.array([p.mu.real for p in pairs]),
            np.array([p.mu.imag for p in pairs]),
            np.array([p.residual for p in pairs]),
            np.array([deviation[p.index] for p in pairs]),
        ],
    )

    probe = strict_properness_probe(
        ctx.plant, ctx.observation, "left", PROBE_S_VALUES, count=ctx.settings.modal_count
    )
    write_rows_csv(
        out / "probe.csv",
        ["s", "magnitude", "bound"],
        [np.array(probe.s_values), np.array(probe.magnitudes), np.array(probe.bounds)],
    )

    gains = ctx.gains
    E = ctx.exosystem
    A_r = E.S_r + np.outer(gains.l_r, E.q_r)
    A_d = E.S_d + np.outer(gains.l_d, gains.n_at_right)
    observer = observer_error_spectrum(ctx.scenario.tuning.c_o, A_r, A_d, gains.l_d, OBSERVER_MODES)

    summary = {
        "scenario": ctx.scenario.name,
        "q": q,
        "count": count,
        "max_residual": max(p.residual for p in pairs),
        "max_scaled_residual": max(p.scaled_residual for p in pairs),
        "min_re_mu": table.min_re_mu,
        "max_deviation": table.max_deviation,
        "growth_ratio": table.growth_ratio,
        "strip_width": table.strip_width,
        "observer_abscissa": observer.abscissa,
        "observer_finite": [complex(v) for v in observer.finite],
        "closeness_sum": observer.closeness_sum,
        "closeness_tail": observer.tail_estimate,
        "probe_decreasing": probe.strictly_decreasing,
        "probe_within_bound": probe.within_bound,
        "probe_modal_sup": probe.modal_sup,
        "probe_tail": probe.tail_estimate,
    }
    write_json(summary, out / "spectrum_summary.json")
    logger.info(f"Spectrum artifacts written to {out}")
    return summary

"""
Static SVG line charts of recorded series.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from loguru import logger  # noqa: E402

from schro_reg.sim.series import FIT_FLOOR, TimeSeries  # noqa: E402

# Fixed ids and no creation date keep the SVG byte-stable between runs
SVG_RC = {"svg.hashsalt": "schro-reg", "svg.fonttype": "none", "path.simplify": False}


def emit_plot(
    series: TimeSeries,
    columns: Sequence[str],
    path: Path,
    log_scale: bool = False,
    title: Optional[str] = None,
) -> Path:
    """
    Plot |column| against t for each column into one SVG.

    An empty series gives empty axes.

    Raises:
        ConfigError: If a column was not recorded
    """
    if len(series):
        curves = [(name, series.magnitude(name)) for name in columns]
    else:
        curves = []

    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for name, values in curves:
            if log_scale:
                values = np.maximum(values, FIT_FLOOR)
            ax.plot(series.times, values, label=f"|{name}|", linewidth=1.0)
        if log_scale:
            ax.set_yscale("log")
        ax.set_xlabel("t")
        if title:
            ax.set_title(title)
        if curves:
            ax.legend(loc="best")
        ax.grid(True, linewidth=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

    logger.debug(f"Plotted {len(curves)} curves to {path}")
    return path

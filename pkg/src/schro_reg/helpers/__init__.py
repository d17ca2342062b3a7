"""
Artifact writers for schro-reg.
"""

from schro_reg.helpers.export import (
    load_gains,
    save_gains,
    write_json,
    write_kernel_csv,
    write_profiles_csv,
    write_rows_csv,
    write_series_csv,
)
from schro_reg.helpers.plotting import emit_plot

__all__ = [
    "emit_plot",
    "load_gains",
    "save_gains",
    "write_json",
    "write_kernel_csv",
    "write_profiles_csv",
    "write_rows_csv",
    "write_series_csv",
]

"""
CSV and JSON artifacts.

Numbers are written with 17 significant digits, complex columns as `<name>_re,<name>_im`,
LF line endings, no timestamps, so identical runs give byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from loguru import logger

from schro_reg.core import ComplexProfile, KernelGrid, SpatialGrid, triangle_mask
from schro_reg.errors import ConfigError, DimensionError
from schro_reg.kernels import KernelSet
from schro_reg.regulator import GainSet
from schro_reg.sim.series import TimeSeries

NUMBER_FORMAT = "%.17g"
GAINS_FORMAT = "schro-reg-gains/1"


def _split_columns(names: Sequence[str], columns: Sequence[np.ndarray]) -> tuple[list[str], list]:
    header = []
    data = []
    for name, values in zip(names, columns):
        values = np.asarray(values)
        if np.iscomplexobj(values):
            header += [f"{name}_re", f"{name}_im"]
            data += [values.real, values.imag]
        else:
            header.append(name)
            data.append(values.astype(float))
    return header, data


def write_rows_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> Path:
    """Write equal-length columns under a header row."""
    path.parent.mkdir(parents=True, exist_ok=True)
    names, data = _split_columns(header, columns)
    if data:
        table = np.column_stack(data)
    else:
        table = np.zeros((0, 0))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(names) + "\n")
        if table.size:
            np.savetxt(f, table, fmt=NUMBER_FORMAT, delimiter=",", newline="\n")
    logger.debug(f"Wrote {table.shape[0]} rows to {path}")
    return path


def write_series_csv(series: TimeSeries, path: Path) -> Path:
    """t followed by every recorded column in recording order."""
    names = ["t", *series.names]
    columns = [series.times, *(series.columns[n] for n in series.names)]
    write_rows_csv(path, names, columns)
    logger.info(f"Exported {len(series)} records to {path}")
    return path


def write_profiles_csv(series: TimeSeries, path: Path) -> Path:
    """Snapshots in long form: t, x, then one complex column per snapshot name."""
    names = list(series.snapshots)
    if not names:
        return write_rows_csv(path, ["t", "x"], [np.zeros(0), np.zeros(0)])
    grid = series.snapshots[names[0]][0].grid
    count = len(series.snapshot_times)
    t = np.repeat(series.snapshot_times, grid.size)
    x = np.tile(grid.nodes, count)
    columns = [
        np.concatenate([p.values for p in series.snapshots[name]]).astype(complex)
        for name in names
    ]
    return write_rows_csv(path, ["t", "x", *names], [t, x, *columns])


def write_kernel_csv(kernel: KernelGrid, path: Path) -> Path:
    """x, xi, re, im for every node of the kernel's triangle, row by row."""
    mask = kernel.mask
    x, xi = np.meshgrid(kernel.grid.nodes, kernel.grid.nodes, indexing="ij")
    values = kernel.values[mask]
    return write_rows_csv(
        path, ["x", "xi", "re", "im"], [x[mask], xi[mask], values.real, values.imag]
    )


def _finite(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.generic):
        return _finite(obj.item())
    if isinstance(obj, complex):
        return [_finite(obj.real), _finite(obj.imag)]
    return obj


def write_json(data: Any, path: Path) -> Path:
    """JSON with indent 2; complex numbers become [re, im], non-finite floats null."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(_finite(data), f, indent=2)
        f.write("\n")
    logger.debug(f"Wrote {path}")
    return path


def _pairs(values: np.ndarray) -> list[list[float]]:
    values = np.asarray(values, dtype=complex).reshape(-1)
    return np.column_stack([values.real, values.imag]).tolist()


def _unpairs(data: Any, name: str) -> np.ndarray:
    array = np.asarray(data, dtype=float)
    if array.size == 0:
        return np.zeros(0, dtype=complex)
    if array.ndim != 2 or array.shape[1] != 2:
        raise ConfigError(f"gains field {name} must be a list of [re, im] pairs")
    return array[:, 0] + 1j * array[:, 1]


def _pack_kernel(kernel: KernelGrid) -> list[list[float]]:
    return _pairs(kernel.values[kernel.mask])


def _unpack_kernel(data: Any, grid: SpatialGrid, orientation: str, name: str) -> KernelGrid:
    mask = triangle_mask(grid.size, orientation)  # type: ignore[arg-type]
    packed = _unpairs(data, name)
    if packed.size != int(mask.sum()):
        raise DimensionError(f"kernel {name} has {packed.size} entries, grid needs {mask.sum()}")
    values = np.zeros((grid.size, grid.size), dtype=complex)
    values[mask] = packed
    return KernelGrid(grid, orientation, values)  # type: ignore[arg-type]


def gains_to_dict(gains: GainSet) -> dict[str, Any]:
    """Serializable form of a GainSet; kernels are packed row by row on their triangle."""
    kernels = gains.kernels
    return {
        "format": GAINS_FORMAT,
        "n_cells": gains.grid.n_cells,
        "c_s": kernels.c_s,
        "c_o": kernels.c_o,
        "kernels": {name: _pack_kernel(getattr(kernels, name)) for name in ("k", "K", "p", "P")},
        "m": [_pairs(p.values) for p in gains.m],
        "m_w": _pairs(gains.m_w),
        "n": [_pairs(p.values) for p in gains.n],
        "l_profile": _pairs(gains.l_profile.values),
        "l0": [gains.l0.real, gains.l0.imag],
        "l_d": _pairs(gains.l_d),
        "l_r": [float(v) for v in gains.l_r],
    }


def gains_from_dict(data: dict[str, Any]) -> GainSet:
    """
    Rebuild a GainSet written by gains_to_dict.

    Raises:
        ConfigError: If the document is not a gains file or is malformed
    """
    if not isinstance(data, dict) or data.get("format") != GAINS_FORMAT:
        raise ConfigError("not a schro-reg gains document")
    try:
        grid = SpatialGrid(int(data["n_cells"]))
        packed = data["kernels"]
        kernels = KernelSet(
            k=_unpack_kernel(packed["k"], grid, "lower", "k"),
            K=_unpack_kernel(packed["K"], grid, "lower", "K"),
            p=_unpack_kernel(packed["p"], grid, "upper", "p"),
            P=_unpack_kernel(packed["P"], grid, "upper", "P"),
            c_s=float(data["c_s"]),
            c_o=float(data["c_o"]),
        )
        l0 = data["l0"]
        return GainSet(
            kernels=kernels,
            m=tuple(ComplexProfile(grid, _unpairs(p, "m")) for p in data["m"]),
            m_w=_unpairs(data["m_w"], "m_w"),
            n=tuple(ComplexProfile(grid, _unpairs(p, "n")) for p in data["n"]),
            l_profile=ComplexProfile(grid, _unpairs(data["l_profile"], "l_profile")),
            l0=complex(l0[0], l0[1]),
            l_d=_unpairs(data["l_d"], "l_d"),
            l_r=np.asarray(data["l_r"], dtype=float),
        )
    except (KeyError, TypeError, IndexError) as e:
        raise ConfigError(f"malformed gains document: {e}") from None


def save_gains(gains: GainSet, path: Path) -> Path:
    write_json(gains_to_dict(gains), path)
    logger.info(f"Exported gains on {gains.grid.n_cells} cells to {path}")
    return path


def load_gains(path: Path) -> GainSet:
    if not path.exists():
        raise ConfigError(f"gains file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from None
    gains = gains_from_dict(data)
    logger.debug(f"Loaded gains from {path}")
    return gains

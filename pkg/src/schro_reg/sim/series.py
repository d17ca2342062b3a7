"""
Recorded trajectories and the diagnostics computed from them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike
from scipy.integrate import trapezoid
from scipy.stats import linregress

from schro_reg.core import ComplexProfile, RealArray
from schro_reg.errors import ConfigError, DimensionError

FIT_FLOOR = 1e-14
MIN_FIT_SAMPLES = 10


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled scalar records plus optional profile snapshots.

    Attributes:
        times: Record times, uniform step
        columns: Scalar records keyed by name, in recording order
        snapshot_times: Times of the stored profiles
        snapshots: Profiles keyed by name, one per snapshot time
    """

    times: RealArray
    columns: dict[str, np.ndarray]
    snapshot_times: RealArray = field(default_factory=lambda: np.zeros(0))
    snapshots: dict[str, list[ComplexProfile]] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.size > 2:
            steps = np.diff(times)
            if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])) + 1e-12:
                raise DimensionError("record times are not uniform")
        for name, values in self.columns.items():
            if len(values) != times.size:
                raise DimensionError(
                    f"column {name} has {len(values)} records, expected {times.size}"
                )
        if "E" in self.columns and np.any(np.asarray(self.columns["E"]) < 0):
            raise DimensionError("energy record is negative")
        for name, profiles in self.snapshots.items():
            if len(profiles) != len(self.snapshot_times):
                raise DimensionError(f"snapshot list {name} does not match its times")
        object.__setattr__(self, "times", times)

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def __len__(self) -> int:
        return self.times.size

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise ConfigError(
                f"unknown column {name!r}; available: {', '.join(self.columns)}"
            ) from None

    def magnitude(self, name: str) -> RealArray:
        return np.abs(self.column(name))

    def window(self, t_a: float, t_b: float) -> np.ndarray:
        """Boolean mask of records with t_a <= t <= t_b."""
        eps = 1e-9 * max(1.0, abs(t_b))
        return (self.times >= t_a - eps) & (self.times <= t_b + eps)


class SeriesRecorder:
    """Append-only recorder that becomes an immutable TimeSeries."""

    def __init__(self):
        self._times: list[float] = []
        self._columns: dict[str, list] = {}
        self._snapshot_times: list[float] = []
        self._snapshots: dict[str, list[ComplexProfile]] = {}

    def record(self, t: float, values: dict[str, complex | float]) -> None:
        if not self._columns:
            self._columns = {name: [] for name in values}
        elif values.keys() != self._columns.keys():
            raise DimensionError("recorded columns changed during the run")
        self._times.append(t)
        for name, value in values.items():
            self._columns[name].append(value)

    def snapshot(self, t: float, profiles: dict[str, ComplexProfile]) -> None:
        if not self._snapshots:
            self._snapshots = {name: [] for name in profiles}
        self._snapshot_times.append(t)
        for name, profile in profiles.items():
            self._snapshots[name].append(profile)

    def freeze(self) -> TimeSeries:
        columns = {}
        for name, values in self._columns.items():
            array = np.asarray(values)
            if not np.iscomplexobj(array):
                array = array.astype(float)
            columns[name] = array
        return TimeSeries(
            times=np.asarray(self._times, dtype=float),
            columns=columns,
            snapshot_times=np.asarray(self._snapshot_times, dtype=float),
            snapshots=self._snapshots,
        )


def decay_fit(
    times: ArrayLike, values: ArrayLike, window: tuple[float, float] | None = None
) -> tuple[float, float, float]:
    """Fit value ~ M e^{-mu t} by least squares on log(value).

    Values are floored at 1e-14 before the logarithm.

    Returns:
        (M, mu, r^2); mu > 0 means decay

    Raises:
        ConfigError: If fewer than 10 samples fall inside the window
    """
    t = np.asarray(times, dtype=float)
    v = np.abs(np.asarray(values))
    if window is not None:
        eps = 1e-9 * max(1.0, abs(window[1]))
        mask = (t >= window[0] - eps) & (t <= window[1] + eps)
        t, v = t[mask], v[mask]
    if t.size < MIN_FIT_SAMPLES:
        raise ConfigError(f"decay fit needs at least {MIN_FIT_SAMPLES} samples, got {t.size}")
    fit = linregress(t, np.log(np.maximum(v, FIT_FLOOR)))
    r_squared = float(fit.rvalue**2) if np.isfinite(fit.rvalue) else 0.0
    return float(np.exp(fit.intercept)), float(-fit.slope), r_squared


def energy_identity_error(
    series: TimeSeries, q: float, window: tuple[float, float] | None = None, eps: float = 1e-12
) -> float:
    """Max relative mismatch between dE/dt and q |z(0)|^2 over consecutive records.

    Both sides are taken at the midpoint of each recorded step, which is where the
    Crank-Nicolson energy balance holds. Needs the columns E and z_left.
    """
    t = series.times
    E = np.asarray(series.column("E"), dtype=float)
    left = np.asarray(series.column("z_left"))
    if t.size < 2:
        raise ConfigError("energy identity needs at least two records")
    rate = np.diff(E) / np.diff(t)
    flux = q * np.abs(0.5 * (left[1:] + left[:-1])) ** 2
    mid = 0.5 * (t[1:] + t[:-1])
    if window is not None:
        mask = (mid >= window[0]) & (mid <= window[1])
        rate, flux = rate[mask], flux[mask]
    if rate.size == 0:
        raise ConfigError("no recorded steps inside the energy window")
    error = float(np.max(np.abs(rate - flux) / (flux + eps)))
    logger.debug(f"Energy identity relative error {error:.3e} over {rate.size} steps")
    return error


def weighted_error_norm(series: TimeSeries, alpha: float, column: str = "e_y") -> float:
    """(int e^{-2 alpha t} |column|^2 dt)^{1/2} over the recorded horizon."""
    t = series.times
    values = np.abs(series.column(column)) ** 2
    return float(np.sqrt(trapezoid(np.exp(-2 * alpha * t) * values, t)))


def max_ratio_deviation(
    times: RealArray, norms: Sequence[float], rate: float, t_max: float
) -> float:
    """max over t <= t_max of | |x(t)| e^{rate t} / |x(0)| - 1 |."""
    norms = np.asarray(norms, dtype=float)
    if norms.size == 0 or norms[0] == 0:
        raise ConfigError("decay ratio needs a nonzero initial norm")
    mask = times <= t_max + 1e-12
    scaled = norms[mask] * np.exp(rate * times[mask]) / norms[0]
    return float(np.max(np.abs(scaled - 1.0)))

"""
Closed-loop, observer and target-system simulations.

Every run advances the exosystem exactly (matrix exponential of S dt), steps each PDE with
Crank-Nicolson and feeds half-step boundary and source data. Couplings that cannot be made
implicit (the plant reading observer data, the disturbance estimate inside the observer PDE)
are extrapolated to the half step from the two most recent levels.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike
from scipy.linalg import expm

from schro_reg.config import DIVERGENCE_CAP
from schro_reg.core import (
    ComplexArray,
    ComplexProfile,
    ExosystemSpec,
    ObservationFunctional,
    PlantSpec,
    SpatialGrid,
    profile_norm,
)
from schro_reg.errors import ConfigError, DimensionError, DivergenceError
from schro_reg.kernels import apply_inverse, apply_observer_forward, volterra_matrix
from schro_reg.regulator import GainSet
from schro_reg.sim.series import SeriesRecorder, TimeSeries
from schro_reg.sim.stepper import CrankNicolsonStepper, LowRankTerm

TimeSignal = Callable[[float], complex]
COMPATIBILITY_TOL = 1e-2


@dataclass(frozen=True)
class SimConfig:
    """Time grid of a run.

    Attributes:
        grid: Spatial grid
        dt: Time step
        horizon: Final time
        record_every: Record scalars every this many steps
        snapshot_every: Store profiles every this many steps (0 disables snapshots)
        divergence_cap: Norm above which a run is declared divergent
    """

    grid: SpatialGrid
    dt: float
    horizon: float
    record_every: int = 1
    snapshot_every: int = 0
    divergence_cap: float = DIVERGENCE_CAP

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.horizon < self.dt:
            raise ConfigError(f"horizon {self.horizon} is shorter than dt {self.dt}")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be nonnegative")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def wants_record(self, step: int) -> bool:
        return step % self.record_every == 0

    def wants_snapshot(self, step: int) -> bool:
        return self.snapshot_every > 0 and step % self.snapshot_every == 0


def observation_row(C: ObservationFunctional, grid: SpatialGrid) -> ComplexArray:
    """Row vector with C_e[z] = row @ z (linear interpolation plus trapezoid)."""
    row = grid.weights * C.c.resample(grid).values
    position = C.x0 * grid.n_cells
    i = min(int(np.floor(position)), grid.n_cells - 1)
    frac = position - i
    row = row.astype(complex)
    row[i] += C.theta * (1 - frac)
    row[i + 1] += C.theta * frac
    return row


def _exosystem_propagator(E: ExosystemSpec, dt: float) -> np.ndarray:
    if E.n_w == 0:
        return np.zeros((0, 0))
    return expm(E.S * dt)


def first_order_hold(
    A: ArrayLike, b: ArrayLike, dt: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact step of x' = A x + b r(t) for r linear over the step.

    Returns (Phi, G_old, G_new) with x(t + dt) = Phi x(t) + G_old r(t) + G_new r(t + dt),
    read off one exponential of the block matrix [[A, b, 0], [0, 0, 1], [0, 0, 0]].
    """
    A = np.atleast_2d(np.asarray(A, dtype=float)) if np.size(A) else np.zeros((0, 0))
    b = np.asarray(b, dtype=float).reshape(-1)
    n = b.size
    if A.shape != (n, n):
        raise DimensionError(f"A must be {n}x{n}, got shape {A.shape}")
    block = np.zeros((n + 2, n + 2))
    block[:n, :n] = A
    block[:n, n] = b
    block[n, n + 1] = 1.0
    full = expm(block * dt)
    slope = full[:n, n + 1] / dt
    return full[:n, :n], full[:n, n] - slope, slope


def _right_unit(grid: SpatialGrid) -> ComplexArray:
    e = np.zeros(grid.size, dtype=complex)
    e[-1] = 1.0
    return e


def _require_grid(profile: ComplexProfile, grid: SpatialGrid, name: str) -> ComplexArray:
    if profile.grid != grid:
        raise DimensionError(f"{name} lives on a different grid than the simulation")
    return profile.values.astype(complex)


def _guard(name: str, t: float, value: float, cap: float) -> None:
    if not np.isfinite(value) or value > cap:
        raise DivergenceError(name, t, value)


def _check_compatibility(
    z0: ComplexArray, grid: SpatialGrid, q: float, left: complex, right: complex, label: str
) -> None:
    d = grid.spacing
    slope0 = (-3 * z0[0] + 4 * z0[1] - z0[2]) / (2 * d)
    slope1 = (3 * z0[-1] - 4 * z0[-2] + z0[-3]) / (2 * d)
    mismatch = max(abs(slope0 + 1j * q * z0[0] - left), abs(slope1 - right))
    if mismatch > COMPATIBILITY_TOL * (1.0 + float(np.max(np.abs(z0)))):
        logger.warning(f"{label} initial data is incompatible with the boundary conditions "
                       f"(mismatch {mismatch:.3e})")


def _split_state(E: ExosystemSpec, w: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w)
    return w[: E.n_d], w[E.n_d :]


def _exo_columns(prefix: str, w: np.ndarray) -> dict[str, complex | float]:
    return {f"{prefix}_{j}": w[j] for j in range(w.size)}


def simulate_open_loop(
    plant: PlantSpec,
    E: ExosystemSpec,
    u: TimeSignal,
    z0: ComplexProfile,
    cfg: SimConfig,
    C: ObservationFunctional | None = None,
) -> TimeSeries:
    """Plant driven by the exosystem disturbances and a given input u(t)."""
    grid = cfg.grid
    plant = plant.on(grid)
    z = _require_grid(z0, grid, "z0")
    g = plant.g.values
    stepper = CrankNicolsonStepper(grid, plant.h.values, plant.q, cfg.dt)
    Phi = _exosystem_propagator(E, cfg.dt)
    c_row = observation_row(C, grid) if C is not None else None
    w = E.w0.astype(float)
    _check_compatibility(z, grid, plant.q, E.p2 @ w, u(0.0), "open-loop")

    rec = SeriesRecorder()

    def record(t: float) -> None:
        norm = profile_norm(z, grid)
        values = {
            "E": 0.5 * norm**2,
            "norm_z": norm,
            "z_left": z[0],
            "y_m": z[-1],
            "u": complex(u(t)),
            "d1": E.p1 @ w,
            "d2": E.p2 @ w,
            "r": E.pr @ w,
        }
        if c_row is not None:
            values["y"] = c_row @ z
            values["e_y"] = c_row @ z - E.pr @ w
        values.update(_exo_columns("w", w))
        rec.record(t, values)
        if cfg.wants_snapshot(step):
            rec.snapshot(t, {"z": ComplexProfile(grid, z)})

    started = time.perf_counter()
    step = 0
    record(0.0)
    for step in range(1, cfg.steps + 1):
        t_old, t = (step - 1) * cfg.dt, step * cfg.dt
        w_next = Phi @ w
        d1 = 0.5 * (E.p1 @ w + E.p1 @ w_next)
        d2 = 0.5 * (E.p2 @ w + E.p2 @ w_next)
        u_half = 0.5 * (u(t_old) + u(t))
        z = stepper.step(z, g * d1, d2, u_half)
        w = w_next
        _guard("plant norm", t, profile_norm(z, grid), cfg.divergence_cap)
        if cfg.wants_record(step):
            record(t)
    logger.info(f"Open-loop run: {cfg.steps} steps in {time.perf_counter() - started:.2f}s")
    return rec.freeze()


def simulate_state_feedback(
    plant: PlantSpec,
    E: ExosystemSpec,
    gains: GainSet,
    C: ObservationFunctional,
    z0: ComplexProfile,
    cfg: SimConfig,
) -> TimeSeries:
    """Closed loop under u = k(1,1) z(1) + int k_x(1, xi) z dxi + m_w . w.

    The collocated and integral terms are implicit; m_w . w is exact at the half step.
    Records e_y and the regulation error v~ = F[z] - m^T w.
    """
    grid = cfg.grid
    if gains.grid != grid:
        raise DimensionError("gains were assembled on a different grid")
    plant = plant.on(grid)
    z = _require_grid(z0, grid, "z0")
    g = plant.g.values
    k11 = gains.k11
    omega = grid.weights * gains.kx1.values
    feedback = LowRankTerm(column=_right_unit(grid) * (-2j / grid.spacing), row=omega)
    stepper = CrankNicolsonStepper(
        grid, plant.h.values, plant.q, cfg.dt, right_gain=k11, couplings=[feedback]
    )
    F = volterra_matrix(gains.kernels.k, -1.0)
    M = gains.m_matrix
    m_w = gains.m_w
    c_row = observation_row(C, grid)
    Phi = _exosystem_propagator(E, cfg.dt)
    w = E.w0.astype(float)
    _check_compatibility(
        z, grid, plant.q, E.p2 @ w, k11 * z[-1] + omega @ z + m_w @ w, "state-feedback"
    )

    rec = SeriesRecorder()

    def record(t: float) -> None:
        norm = profile_norm(z, grid)
        v_tilde = F @ z - M @ w
        y = c_row @ z
        values = {
            "E": 0.5 * norm**2,
            "norm_z": norm,
            "u": k11 * z[-1] + omega @ z + m_w @ w,
            "y": y,
            "r": E.pr @ w,
            "e_y": y - E.pr @ w,
            "norm_v_tilde": profile_norm(v_tilde, grid),
            "y_m": z[-1],
            "d1": E.p1 @ w,
            "d2": E.p2 @ w,
        }
        values.update(_exo_columns("w", w))
        rec.record(t, values)
        if cfg.wants_snapshot(step):
            rec.snapshot(
                t, {"z": ComplexProfile(grid, z), "v_tilde": ComplexProfile(grid, v_tilde)}
            )

    started = time.perf_counter()
    step = 0
    record(0.0)
    for step in range(1, cfg.steps + 1):
        t = step * cfg.dt
        w_next = Phi @ w
        d1 = 0.5 * (E.p1 @ w + E.p1 @ w_next)
        d2 = 0.5 * (E.p2 @ w + E.p2 @ w_next)
        z = stepper.step(z, g * d1, d2, 0.5 * (m_w @ w + m_w @ w_next))
        w = w_next
        _guard("plant norm", t, profile_norm(z, grid), cfg.divergence_cap)
        if cfg.wants_record(step):
            record(t)
    logger.info(f"State-feedback run: {cfg.steps} steps in {time.perf_counter() - started:.2f}s")
    return rec.freeze()


class _ObserverCore:
    """Observer PDE plus the disturbance and reference estimators.

    One call to advance() consumes the half-step measurement and input plus the reference
    samples r(t) and r(t + dt), and moves (z^, w^_d, w^_r) forward by dt. The reference
    estimator sees r only, through a first-order hold.
    """

    def __init__(
        self,
        plant: PlantSpec,
        E: ExosystemSpec,
        gains: GainSet,
        cfg: SimConfig,
        zhat0: ComplexArray,
        what0: ArrayLike,
    ):
        grid = cfg.grid
        self.E = E
        self.dt = cfg.dt
        self.g = plant.g.values
        self.l = gains.l_profile.values
        self.l0 = gains.l0
        self.l_d = gains.l_d
        injection = LowRankTerm(column=self.l, row=_right_unit(grid))
        self.stepper = CrankNicolsonStepper(
            grid, plant.h.values, plant.q, cfg.dt, right_gain=self.l0, couplings=[injection]
        )
        what = np.asarray(what0, dtype=complex).reshape(-1)
        if what.size != E.n_w:
            raise DimensionError(f"observer exosystem state needs {E.n_w} entries")
        self.z = zhat0
        self.wd, self.wr = _split_state(E, what)
        self._wd_prev = self.wd.copy()
        half = 0.5 * cfg.dt
        identity = np.eye(E.n_d)
        self._wd_explicit = identity + half * E.S_d
        self._wd_implicit = np.linalg.inv(identity - half * E.S_d) if E.n_d else identity
        A_r = E.S_r + np.outer(gains.l_r, E.q_r)
        self._wr_step = first_order_hold(A_r, -gains.l_r, cfg.dt)

    @property
    def w(self) -> ComplexArray:
        return np.concatenate([self.wd, self.wr])

    def advance(
        self, u_half: complex, y_m_half: complex, r_old: complex, r_new: complex
    ) -> None:
        E = self.E
        wd_half = 1.5 * self.wd - 0.5 * self._wd_prev
        source = self.g * (E.q_d1 @ wd_half) - self.l * y_m_half
        z_next = self.stepper.step(
            self.z, source, E.q_d2 @ wd_half, u_half - self.l0 * y_m_half
        )
        innovation = 0.5 * (self.z[-1] + z_next[-1]) - y_m_half
        wd_next = self._wd_implicit @ (self._wd_explicit @ self.wd + self.dt * self.l_d * innovation)
        self._wd_prev = self.wd
        self.wd = wd_next
        Phi, hold_old, hold_new = self._wr_step
        self.wr = Phi @ self.wr + hold_old * r_old + hold_new * r_new
        self.z = z_next


def simulate_observer(
    plant: PlantSpec,
    E: ExosystemSpec,
    gains: GainSet,
    u: TimeSignal,
    cfg: SimConfig,
    z0: ComplexProfile,
    zhat0: ComplexProfile,
    what0: ArrayLike,
) -> TimeSeries:
    """Plant under a given input together with the observer driven by y_m = z(1) and r.

    Records the error norms and the transformed error e~ = F_o^{-1}[z~] - n^T w~_d.
    """
    grid = cfg.grid
    if gains.grid != grid:
        raise DimensionError("gains were assembled on a different grid")
    plant = plant.on(grid)
    z = _require_grid(z0, grid, "z0")
    g = plant.g.values
    plant_stepper = CrankNicolsonStepper(grid, plant.h.values, plant.q, cfg.dt)
    observer = _ObserverCore(plant, E, gains, cfg, _require_grid(zhat0, grid, "zhat0"), what0)
    P_inverse = volterra_matrix(gains.kernels.P, 1.0)
    N = gains.n_matrix
    Phi = _exosystem_propagator(E, cfg.dt)
    w = E.w0.astype(float)

    rec = SeriesRecorder()

    def record(t: float) -> None:
        w_d, w_r = _split_state(E, w)
        z_tilde = observer.z - z
        wd_tilde = observer.wd - w_d
        e_tilde = P_inverse @ z_tilde - N @ wd_tilde
        values = {
            "norm_z": profile_norm(z, grid),
            "norm_z_tilde": profile_norm(z_tilde, grid),
            "norm_w_tilde_d": float(np.linalg.norm(wd_tilde)),
            "norm_w_tilde_r": float(np.linalg.norm(observer.wr - w_r)),
            "norm_e_tilde": profile_norm(e_tilde, grid),
            "y_m": z[-1],
            "u": complex(u(t)),
        }
        values.update(_exo_columns("w", w))
        values.update(_exo_columns("w_hat", observer.w))
        rec.record(t, values)
        if cfg.wants_snapshot(step):
            rec.snapshot(
                t, {"z_tilde": ComplexProfile(grid, z_tilde), "e_tilde": ComplexProfile(grid, e_tilde)}
            )

    started = time.perf_counter()
    step = 0
    record(0.0)
    for step in range(1, cfg.steps + 1):
        t_old, t = (step - 1) * cfg.dt, step * cfg.dt
        w_next = Phi @ w
        d1 = 0.5 * (E.p1 @ w + E.p1 @ w_next)
        d2 = 0.5 * (E.p2 @ w + E.p2 @ w_next)
        u_half = 0.5 * (u(t_old) + u(t))
        z_next = plant_stepper.step(z, g * d1, d2, u_half)
        y_m_half = 0.5 * (z[-1] + z_next[-1])
        observer.advance(u_half, y_m_half, E.pr @ w, E.pr @ w_next)
        z, w = z_next, w_next
        _guard("plant norm", t, profile_norm(z, grid), cfg.divergence_cap)
        _guard("observer norm", t, profile_norm(observer.z, grid), cfg.divergence_cap)
        if cfg.wants_record(step):
            record(t)
    logger.info(f"Observer run: {cfg.steps} steps in {time.perf_counter() - started:.2f}s")
    return rec.freeze()


def simulate_output_feedback(
    plant: PlantSpec,
    E: ExosystemSpec,
    gains: GainSet,
    C: ObservationFunctional,
    cfg: SimConfig,
    z0: ComplexProfile,
    zhat0: ComplexProfile,
    what0: ArrayLike,
) -> TimeSeries:
    """Plant and observer under u = k(1,1) z^(1) + int k_x(1, xi) z^ dxi + m_w . w^.

    The plant treats its own k(1,1) z(1) + int k_x z part implicitly and receives the
    correction k(1,1) z~(1) + int k_x z~ + m_w . w^ extrapolated to the half step. The
    observer gets the half-step input the plant actually used.
    """
    grid = cfg.grid
    if gains.grid != grid:
        raise DimensionError("gains were assembled on a different grid")
    plant = plant.on(grid)
    z = _require_grid(z0, grid, "z0")
    g = plant.g.values
    k11 = gains.k11
    omega = grid.weights * gains.kx1.values
    feedback = LowRankTerm(column=_right_unit(grid) * (-2j / grid.spacing), row=omega)
    plant_stepper = CrankNicolsonStepper(
        grid, plant.h.values, plant.q, cfg.dt, right_gain=k11, couplings=[feedback]
    )
    observer = _ObserverCore(plant, E, gains, cfg, _require_grid(zhat0, grid, "zhat0"), what0)
    F = volterra_matrix(gains.kernels.k, -1.0)
    P_inverse = volterra_matrix(gains.kernels.P, 1.0)
    M = gains.m_matrix
    N = gains.n_matrix
    m_w = gains.m_w
    c_row = observation_row(C, grid)
    Phi = _exosystem_propagator(E, cfg.dt)
    w = E.w0.astype(float)

    def correction() -> complex:
        z_tilde = observer.z - z
        return k11 * z_tilde[-1] + omega @ z_tilde + m_w @ observer.w

    rec = SeriesRecorder()

    def record(t: float) -> None:
        w_d, _ = _split_state(E, w)
        z_tilde = observer.z - z
        w_tilde = observer.w - w
        v_tilde = F @ z - M @ w
        e_tilde = P_inverse @ z_tilde - N @ (observer.wd - w_d)
        y = c_row @ z
        values = {
            "e_y": y - E.pr @ w,
            "y": y,
            "r": E.pr @ w,
            "u": k11 * observer.z[-1] + omega @ observer.z + m_w @ observer.w,
            "norm_z": profile_norm(z, grid),
            "norm_z_hat": profile_norm(observer.z, grid),
            "norm_z_tilde": profile_norm(z_tilde, grid),
            "norm_w_tilde": float(np.linalg.norm(w_tilde)),
            "norm_v_tilde": profile_norm(v_tilde, grid),
            "norm_e_tilde": profile_norm(e_tilde, grid),
            "target_right": k11 * z_tilde[-1] + omega @ z_tilde + m_w @ w_tilde,
            "y_m": z[-1],
        }
        values.update(_exo_columns("w", w))
        values.update(_exo_columns("w_hat", observer.w))
        rec.record(t, values)
        if cfg.wants_snapshot(step):
            rec.snapshot(
                t,
                {
                    "z": ComplexProfile(grid, z),
                    "z_hat": ComplexProfile(grid, observer.z),
                    "v_tilde": ComplexProfile(grid, v_tilde),
                },
            )

    started = time.perf_counter()
    step = 0
    record(0.0)
    previous = correction()
    for step in range(1, cfg.steps + 1):
        t = step * cfg.dt
        current = correction()
        extra = current if step == 1 else 1.5 * current - 0.5 * previous
        previous = current
        w_next = Phi @ w
        d1 = 0.5 * (E.p1 @ w + E.p1 @ w_next)
        d2 = 0.5 * (E.p2 @ w + E.p2 @ w_next)
        z_next = plant_stepper.step(z, g * d1, d2, extra)
        z_half = 0.5 * (z + z_next)
        u_half = k11 * z_half[-1] + omega @ z_half + extra
        observer.advance(u_half, z_half[-1], E.pr @ w, E.pr @ w_next)
        z, w = z_next, w_next
        _guard("plant norm", t, profile_norm(z, grid), cfg.divergence_cap)
        _guard("observer norm", t, profile_norm(observer.z, grid), cfg.divergence_cap)
        if cfg.wants_record(step):
            record(t)
    logger.info(f"Output-feedback run: {cfg.steps} steps in {time.perf_counter() - started:.2f}s")
    return rec.freeze()


def simulate_target(
    c: float, v0: ComplexProfile, boundary_right: TimeSignal | None, cfg: SimConfig
) -> TimeSeries:
    """Damped Neumann target v_t = -i v_xx - c v, v_x(0) = 0, v_x(1) = boundary_right(t)."""
    grid = cfg.grid
    v = _require_grid(v0, grid, "v0")
    right = boundary_right or (lambda t: 0.0)
    stepper = CrankNicolsonStepper(grid, np.full(grid.size, -c), 0.0, cfg.dt)

    rec = SeriesRecorder()

    def record(t: float) -> None:
        rec.record(
            t, {"norm_v": profile_norm(v, grid), "v_left": v[0], "v_right": v[-1]}
        )
        if cfg.wants_snapshot(step):
            rec.snapshot(t, {"v": ComplexProfile(grid, v)})

    step = 0
    record(0.0)
    for step in range(1, cfg.steps + 1):
        t_old, t = (step - 1) * cfg.dt, step * cfg.dt
        v = stepper.step(v, None, 0.0, 0.5 * (right(t_old) + right(t)))
        _guard("target norm", t, profile_norm(v, grid), cfg.divergence_cap)
        if cfg.wants_record(step):
            record(t)
    return rec.freeze()


def cosine_profile(grid: SpatialGrid, coefficients: Sequence[complex]) -> ComplexProfile:
    """sum_j coefficients[j] cos(j pi x); satisfies homogeneous Neumann conditions."""
    x = grid.nodes
    values = np.zeros(grid.size, dtype=complex)
    for j, a in enumerate(coefficients):
        values += a * np.cos(j * np.pi * x)
    return ComplexProfile(grid, values)


def open_loop_initial_state(grid: SpatialGrid, d2: complex) -> ComplexProfile:
    """z0 = d2 (x - x^2/2): z0(0) = 0, z0'(0) = d2, z0'(1) = 0, compatible with u(0) = 0."""
    x = grid.nodes
    return ComplexProfile(grid, d2 * (x - 0.5 * x**2))


def _manifold_profile(gains: GainSet, w0: ArrayLike) -> ComplexProfile:
    return ComplexProfile(gains.grid, gains.m_matrix @ np.asarray(w0, dtype=float))


def manifold_state(gains: GainSet, w0: ArrayLike) -> ComplexProfile:
    """z = F^{-1}[m^T w0], the point of the regulation manifold over w0."""
    return apply_inverse(gains.kernels.K, _manifold_profile(gains, w0))


def target_initial_state(
    gains: GainSet, w0: ArrayLike, coefficients: Sequence[complex]
) -> ComplexProfile:
    """Compatible plant state z0 = F^{-1}[v~0 + m^T w0] with v~0 a cosine combination."""
    v_tilde = cosine_profile(gains.grid, coefficients)
    return apply_inverse(gains.kernels.K, v_tilde + _manifold_profile(gains, w0))


def observer_initial_error(
    gains: GainSet, wd_error: ArrayLike, coefficients: Sequence[complex]
) -> ComplexProfile:
    """Compatible observer mismatch z~0 = F_o[e~0 + n^T w~_d0]."""
    e_tilde = cosine_profile(gains.grid, coefficients)
    coupled = ComplexProfile(gains.grid, gains.n_matrix @ np.asarray(wd_error, dtype=complex))
    return apply_observer_forward(gains.kernels.p, e_tilde + coupled)


def boundedness(series: TimeSeries, columns: Sequence[str], factor: float = 1e3) -> dict[str, bool]:
    """Per column: max |value| stays below factor times max(1, |value at t = 0|)."""
    flags = {}
    for name in columns:
        values = series.magnitude(name)
        scale = max(1.0, float(values[0]))
        flags[name] = bool(np.max(values) < factor * scale)
    return flags


def snapshot_distance(a: TimeSeries, name_a: str, b: TimeSeries, name_b: str) -> float:
    """Sup distance between two snapshot sequences taken at the same times."""
    if a.snapshot_times.shape != b.snapshot_times.shape or not np.allclose(
        a.snapshot_times, b.snapshot_times
    ):
        raise DimensionError("snapshot times differ")
    distance = 0.0
    for pa, pb in zip(a.snapshots[name_a], b.snapshots[name_b]):
        distance = max(distance, pa.sup_distance(pb))
    return distance


def boundary_signal(series: TimeSeries, column: str) -> TimeSignal:
    """Piecewise-linear time signal through a recorded complex column."""
    times = series.times
    values = np.asarray(series.column(column), dtype=complex)

    def signal(t: float) -> complex:
        return complex(np.interp(t, times, values.real), np.interp(t, times, values.imag))

    return signal

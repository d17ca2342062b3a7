"""
Acceptance suite: twelve property checks on the reference configuration.

Each check returns a CriterionResult with the measured value, the threshold and a pass
flag; run_verification collects them into the report written as report.json. Wall-clock
times are logged, never written, so the report is reproducible byte for byte.
"""

from __future__ import annotations

import dataclasses
import time
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from schro_reg.core import (
    ExosystemSpec,
    KernelGrid,
    ObservationFunctional,
    PlantSpec,
    SpatialGrid,
)
from schro_reg.errors import RegulatorError, SolvabilityError
from schro_reg.kernels import (
    apply_forward,
    apply_inverse,
    apply_observer_forward,
    apply_observer_inverse,
    build_kernels,
    kernel_residual,
    solve_control_kernel,
    solve_observer_kernel,
)
from schro_reg.modes.closedloop import run_closed_loop, summarize
from schro_reg.modes.context import ScenarioContext
from schro_reg.regulator import assemble_gains, regulator_residuals, solve_m
from schro_reg.sim import (
    SimConfig,
    boundary_signal,
    cosine_profile,
    decay_fit,
    energy_identity_error,
    manifold_state,
    max_ratio_deviation,
    observer_initial_error,
    simulate_observer,
    simulate_open_loop,
    simulate_output_feedback,
    simulate_state_feedback,
    simulate_target,
    snapshot_distance,
    target_initial_state,
)
from schro_reg.spectral import asymptotics_report, eigenvalues_A, strict_properness_probe

ROUNDTRIP_SAMPLES = 20
ROUNDTRIP_SEED = 20240917
PROBE_S_VALUES = (50.0, 100.0, 200.0, 400.0, 800.0)
GATE_CELLS = 50


class CriterionResult(BaseModel):
    """One line of report.json."""

    model_config = ConfigDict(populate_by_name=True)

    id: int
    description: str
    measured: Optional[float] = None
    threshold: Optional[float] = None
    passed: bool = Field(default=False, alias="pass")
    details: dict[str, Any] = Field(default_factory=dict)


class VerificationReport(BaseModel):
    """Full report; exit_hint is 0 when every criterion passed, else 1."""

    scenario: str
    criteria: list[CriterionResult]
    exit_hint: int

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def write(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.model_dump_json(indent=2, by_alias=True))
            f.write("\n")
        logger.info(f"Verification report written to {path}")
        return path


Check = Callable[[ScenarioContext], CriterionResult]
CRITERIA: dict[int, tuple[str, Check]] = {}


def criterion(number: int, description: str) -> Callable[[Check], Check]:
    def register(func: Check) -> Check:
        CRITERIA[number] = (description, func)
        return func

    return register


def _result(number: int, measured: float, threshold: float, passed: bool, **details) -> CriterionResult:
    return CriterionResult(
        id=number,
        description=CRITERIA[number][0],
        measured=float(measured),
        threshold=float(threshold),
        passed=bool(passed),
        details=_plain(details),
    )


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def _with_w0(E: ExosystemSpec, w0: Sequence[float]) -> ExosystemSpec:
    return dataclasses.replace(E, w0=np.asarray(w0, dtype=float))


def _sim(ctx: ScenarioContext, horizon: float, record_every: int, snapshot_every: int = 0) -> SimConfig:
    return SimConfig(
        grid=ctx.grid,
        dt=ctx.scenario.numerics.dt,
        horizon=horizon,
        record_every=record_every,
        snapshot_every=snapshot_every,
        divergence_cap=ctx.settings.divergence_cap,
    )


@criterion(1, "Kernel oracle: h=0, c=0, q=1 kernels match the closed form; residual ratio 100/200 cells in [3, 5]")
def check_kernel_oracle(ctx: ScenarioContext) -> CriterionResult:
    grid = SpatialGrid(200)
    flat = PlantSpec.uniform(grid, q=1.0)
    k = solve_control_kernel(flat, 0.0, grid)
    p = solve_observer_kernel(flat, 0.0, grid)
    k_exact = KernelGrid.from_function(grid, "lower", lambda x, xi: -1j * np.exp(1j * (x - xi)))
    p_exact = KernelGrid.from_function(grid, "upper", lambda x, xi: -1j * np.exp(1j * (xi - x)))
    error = max(k.sup_distance(k_exact), p.sup_distance(p_exact))

    c_s = ctx.scenario.tuning.c_s
    residuals = []
    for cells in (100, 200):
        g = SpatialGrid(cells)
        plant = ctx.plant.on(g)
        residuals.append(kernel_residual(solve_control_kernel(plant, c_s, g), plant, c_s, "control"))
    ratio = residuals[0] / residuals[1] if residuals[1] > 0 else float("inf")
    return _result(
        1, error, 5e-4, error < 5e-4 and 3.0 <= ratio <= 5.0,
        residual_100=residuals[0], residual_200=residuals[1], ratio=ratio,
    )


@criterion(2, "Transform round trip: sup |F^-1 F z - z| and sup |F_o^-1 F_o e - e| below 10 dx^2 on 20 random smooth profiles")
def check_roundtrip(ctx: ScenarioContext) -> CriterionResult:
    ks = ctx.kernels
    grid = ctx.grid
    rng = np.random.default_rng(ROUNDTRIP_SEED)
    forward = observer = 0.0
    for _ in range(ROUNDTRIP_SAMPLES):
        raw = rng.normal(size=6) + 1j * rng.normal(size=6)
        z = cosine_profile(grid, raw / (1.0 + np.arange(6)) ** 2)
        forward = max(forward, apply_inverse(ks.K, apply_forward(ks.k, z)).sup_distance(z))
        observer = max(
            observer, apply_observer_inverse(ks.P, apply_observer_forward(ks.p, z)).sup_distance(z)
        )
    bound = 10 * grid.spacing**2
    worst = max(forward, observer)
    return _result(2, worst, bound, worst < bound, forward=forward, observer=observer)


@criterion(3, "Spectrum q=1, n=5..50: scaled root residuals < 1e-12, Re mu > 0, no growth of n^2 |mu_n - 2q - i (n pi)^2|")
def check_spectrum(ctx: ScenarioContext) -> CriterionResult:
    q = 1.0
    pairs = [p for p in eigenvalues_A(q, 50, tol=ctx.settings.newton_tol) if p.index >= 5]
    table = asymptotics_report(pairs, q)
    scaled = max(p.scaled_residual for p in pairs)
    absolute = max(p.residual for p in pairs)
    passed = (
        scaled < 1e-12
        and absolute < 1e-10
        and table.min_re_mu > 0
        and table.growth_ratio <= 1.5
    )
    return _result(
        3, table.growth_ratio, 1.5, passed,
        max_scaled_residual=scaled, max_residual=absolute, min_re_mu=table.min_re_mu,
        max_deviation=table.max_deviation,
    )


@criterion(4, "Regulator residuals: closed forms satisfy ODEs and boundary conditions to 1e-8, nonlocal condition to 1e-6, centered-difference ODE residuals within their O(spacing^2) bounds")
def check_regulator(ctx: ScenarioContext) -> CriterionResult:
    res = regulator_residuals(ctx.plant, ctx.exosystem, ctx.observation, ctx.gains)
    worst = res.worst_closed_form
    passed = worst < 1e-8 and res.m_nonlocal < 1e-6 and res.finite_difference_ok
    return _result(
        4, worst, 1e-8, passed,
        m_nonlocal=res.m_nonlocal, m_w_gap=res.m_w_gap,
        m_finite_difference=res.m_finite_difference, m_fd_bound=res.m_fd_bound,
        n_finite_difference=res.n_finite_difference, n_fd_bound=res.n_fd_bound,
    )


@criterion(5, "Energy identity: open loop, h=0, z0=1, relative error of dE/dt vs q |z(0)|^2 below 2% on [0.05, 1]")
def check_energy(ctx: ScenarioContext) -> CriterionResult:
    q = ctx.plant.q
    plant = PlantSpec.uniform(ctx.grid, q=q)
    E = _with_w0(ctx.exosystem, np.zeros(ctx.exosystem.n_w))
    series = simulate_open_loop(plant, E, lambda t: 0.0, ctx.grid.constant(1.0), _sim(ctx, 1.0, 1))
    error = energy_identity_error(series, q, window=(0.05, 1.0))
    energy = np.asarray(series.column("E"))
    return _result(
        5, error, 0.02, error < 0.02, nondecreasing=bool(np.all(np.diff(energy) >= -1e-12))
    )


@criterion(6, "Exact target decay: state feedback with w0=0, max over t <= 3/c_s of | |v~(t)| e^(c_s t)/|v~(0)| - 1 | < 1%")
def check_target_decay(ctx: ScenarioContext) -> CriterionResult:
    c_s = ctx.scenario.tuning.c_s
    horizon = 3.0 / c_s
    E = _with_w0(ctx.exosystem, np.zeros(ctx.exosystem.n_w))
    z0 = target_initial_state(ctx.gains, E.w0, ctx.scenario.initial.v_coefficients)
    series = simulate_state_feedback(ctx.plant, E, ctx.gains, ctx.observation, z0, _sim(ctx, horizon, 10))
    deviation = max_ratio_deviation(series.times, series.magnitude("norm_v_tilde"), c_s, horizon)
    return _result(6, deviation, 0.01, deviation < 0.01)


@criterion(7, "Regulation manifold: z0 = F^-1[m^T w0] keeps max |e_y| below 1e-3 over horizon 5")
def check_manifold(ctx: ScenarioContext) -> CriterionResult:
    z0 = manifold_state(ctx.gains, ctx.w0)
    series = simulate_state_feedback(
        ctx.plant, ctx.exosystem, ctx.gains, ctx.observation, z0, _sim(ctx, 5.0, 10)
    )
    worst = float(np.max(series.magnitude("e_y")))
    return _result(7, worst, 1e-3, worst < 1e-3)


@criterion(8, "Observer decay: |e~(t)| e^(c_o t) constant within 2% for t <= 3/c_o; |w~_r| rate within 10% of the slowest placed pole")
def check_observer(ctx: ScenarioContext) -> CriterionResult:
    E0 = ctx.exosystem
    gains = ctx.gains
    c_o = ctx.scenario.tuning.c_o
    w0 = np.zeros(E0.n_w)
    if E0.n_r:
        w0[E0.n_d] = 1.0
    E = _with_w0(E0, w0)
    wd_error = np.full(E.n_d, 0.1)
    what0 = np.concatenate([w0[: E.n_d] + wd_error, np.zeros(E.n_r)])
    z0 = ctx.grid.zeros()
    zhat0 = observer_initial_error(gains, wd_error, ctx.scenario.initial.e_coefficients)
    horizon = 8.0
    series = simulate_observer(ctx.plant, E, gains, lambda t: 0.0, _sim(ctx, horizon, 10), z0, zhat0, what0)

    deviation = max_ratio_deviation(
        series.times, series.magnitude("norm_e_tilde"), c_o, 3.0 / c_o
    )
    poles_r, _ = ctx.scenario.poles(E)
    slowest = -max(complex(p).real for p in poles_r)
    _, rate, r2 = decay_fit(series.times, series.magnitude("norm_w_tilde_r"), (0.5 * horizon, horizon))
    rate_gap = abs(rate - slowest) / slowest
    return _result(
        8, deviation, 0.02, deviation < 0.02 and rate_gap < 0.1,
        w_tilde_r_rate=rate, slowest_pole_rate=slowest, rate_gap=rate_gap, fit_r2=r2,
    )


@criterion(9, "Output regulation: decay fit on |e_y| over the second half of horizon 10 has mu > 0, r^2 > 0.8; terminal < 1e-2 peak; norms bounded")
def check_output_regulation(ctx: ScenarioContext) -> CriterionResult:
    horizon = 10.0
    series = run_closed_loop(ctx, horizon=horizon)
    summary = summarize(series, horizon)
    passed = (
        summary["fit_rate"] > 0
        and summary["fit_r2"] > 0.8
        and summary["terminal_to_peak"] < 1e-2
        and summary["bounded"]
        and np.isfinite(summary["weighted_norm"])
    )
    return _result(9, summary["fit_rate"], 0.0, passed, **summary)


@criterion(10, "Strict properness: |C (sI - A)^-1 B| strictly decreasing over s in {50, ..., 800} and below the modal bound")
def check_probe(ctx: ScenarioContext) -> CriterionResult:
    grid = SpatialGrid(200)
    plant = PlantSpec.uniform(grid, q=1.0)
    C = ObservationFunctional.point(grid, 0.0)
    probe = strict_properness_probe(plant, C, "left", PROBE_S_VALUES, count=ctx.settings.modal_count)
    return _result(
        10, probe.magnitudes[-1], probe.bounds[-1], probe.strictly_decreasing and probe.within_bound,
        magnitudes=probe.magnitudes, bounds=probe.bounds, modal_sup=probe.modal_sup,
        tail_estimate=probe.tail_estimate,
    )


@criterion(11, "Cross-validation: transformed output-feedback trajectory matches the directly simulated target system to 5e-3")
def check_cross_validation(ctx: ScenarioContext) -> CriterionResult:
    gains = ctx.gains
    E = ctx.exosystem
    horizon = 2.0
    steps = int(round(horizon / ctx.scenario.numerics.dt))
    stride = max(1, steps // 10)
    cfg = _sim(ctx, horizon, 1, stride)
    initial = ctx.scenario.initial
    w_error = ctx.scenario.w_hat_error(E)
    z0 = target_initial_state(gains, ctx.w0, initial.v_coefficients)
    zhat0 = z0 + observer_initial_error(gains, w_error[: E.n_d], initial.e_coefficients)
    loop = simulate_output_feedback(
        ctx.plant, E, gains, ctx.observation, cfg, z0, zhat0, ctx.w0 + w_error
    )
    v0 = loop.snapshots["v_tilde"][0]
    target = simulate_target(
        ctx.scenario.tuning.c_s, v0, boundary_signal(loop, "target_right"), cfg
    )
    distance = snapshot_distance(loop, "v_tilde", target, "v")
    return _result(11, distance, 5e-3, distance < 5e-3)


def _cosh_margin_gate(ctx: ScenarioContext) -> RegulatorError | None:
    grid = SpatialGrid(GATE_CELLS)
    plant = ctx.plant.on(grid)
    c_s = ctx.scenario.tuning.c_s
    kernels = build_kernels(plant, c_s, ctx.scenario.tuning.c_o, grid)
    lam = complex(ctx.exosystem.modal.eigenvalues[0])
    mu = np.sqrt(1j * (lam + c_s))
    phi = apply_inverse(kernels.K, grid.profile(np.cosh(mu * grid.nodes)))
    x0 = 0.3
    weight = -phi.at(x0) / phi.integral()
    C = ObservationFunctional(1.0, x0, grid.constant(weight))
    try:
        solve_m(plant, kernels, ctx.exosystem, C, c_s)
    except SolvabilityError as e:
        return e
    return None


def _sinh_root_gate(ctx: ScenarioContext) -> RegulatorError | None:
    grid = SpatialGrid(GATE_CELLS)
    E = ExosystemSpec(
        S_d=np.array([[0.0, np.pi**2], [-np.pi**2, 0.0]]),
        S_r=ctx.exosystem.S_r,
        q_d1=np.array([1.0, 0.0]),
        q_d2=np.array([0.0, 1.0]),
        q_r=ctx.exosystem.q_r,
        w0=np.concatenate([[1.0, 0.0], ctx.exosystem.w0[ctx.exosystem.n_d :]]),
    )
    C = ObservationFunctional(ctx.observation.theta, ctx.observation.x0, ctx.observation.c.resample(grid))
    poles_r, _ = ctx.scenario.poles(ctx.exosystem)
    try:
        assemble_gains(ctx.plant, E, C, ctx.scenario.tuning.c_s, 0.0, poles_r, [-1.5, -2.5], grid)
    except SolvabilityError as e:
        return e
    return None


def _unobservable_gate(ctx: ScenarioContext) -> RegulatorError | None:
    E = ctx.exosystem
    try:
        ExosystemSpec(E.S_d, E.S_r, E.q_d1, E.q_d2, np.zeros(E.n_r), E.w0)
    except RegulatorError as e:
        return e
    return None


@criterion(12, "Solvability gates: cosh margin ~ 0 and sinh root in spec(S_d) exit 3; unobservable (q_r, S_r) exits 2")
def check_gates(ctx: ScenarioContext) -> CriterionResult:
    expected = {
        "cosh_margin": (_cosh_margin_gate, 3, "state-regulator"),
        "sinh_root": (_sinh_root_gate, 3, "observer-regulator"),
        "unobservable": (_unobservable_gate, 2, None),
    }
    details: dict[str, Any] = {}
    hits = 0
    for name, (gate, code, condition) in expected.items():
        error = gate(ctx)
        ok = (
            error is not None
            and error.exit_code == code
            and (condition is None or getattr(error, "condition", None) == condition)
        )
        hits += ok
        details[name] = {
            "exit_code": error.exit_code if error is not None else 0,
            "error": type(error).__name__ if error is not None else None,
            "message": str(error) if error is not None else None,
        }
    return _result(12, hits, len(expected), hits == len(expected), **details)


def run_verification(
    ctx: ScenarioContext, only: Optional[Sequence[int]] = None
) -> VerificationReport:
    """
    Run the selected criteria (all by default) and collect the report.

    A criterion that raises a RegulatorError is recorded as failed with the error message.
    """
    selected = sorted(only) if only else sorted(CRITERIA)
    results = []
    for number in selected:
        if number not in CRITERIA:
            raise ValueError(f"unknown criterion {number}")
        description, check = CRITERIA[number]
        started = time.perf_counter()
        try:
            result = check(ctx)
        except RegulatorError as e:
            logger.error(f"Criterion {number} raised {type(e).__name__}: {e}")
            result = CriterionResult(
                id=number,
                description=description,
                passed=False,
                details={"error": type(e).__name__, "message": str(e)},
            )
        elapsed = time.perf_counter() - started
        status = "pass" if result.passed else "FAIL"
        logger.info(f"Criterion {number}: {status} (measured {result.measured}) in {elapsed:.1f}s")
        results.append(result)
    return VerificationReport(
        scenario=ctx.scenario.name,
        criteria=results,
        exit_hint=0 if all(r.passed for r in results) else 1,
    )

"""
Tests for the Crank-Nicolson stepper, recorded series and the simulation runs.
"""

import dataclasses

import numpy as np
import pytest
from scipy.linalg import expm

from schro_reg.core import ObservationFunctional, PlantSpec, SpatialGrid, profile_norm
from schro_reg.errors import ConfigError, DimensionError, DivergenceError, NumericFailure
from schro_reg.sim import (
    CrankNicolsonStepper,
    LowRankTerm,
    SeriesRecorder,
    SimConfig,
    TimeSeries,
    boundary_signal,
    boundedness,
    cosine_profile,
    decay_fit,
    first_order_hold,
    manifold_state,
    max_ratio_deviation,
    observation_row,
    observer_initial_error,
    open_loop_initial_state,
    simulate_observer,
    simulate_open_loop,
    simulate_output_feedback,
    simulate_state_feedback,
    simulate_target,
    snapshot_distance,
    step_schrodinger,
    target_initial_state,
    weighted_error_norm,
)
from schro_reg.sim.stepper import schrodinger_bands, thomas_solve


def dense(lower, diag, upper):
    return np.diag(diag) + np.diag(upper, 1) + np.diag(lower, -1)


class TestThomas:
    """Test the tridiagonal solver."""

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(7)
        n = 12
        lower = rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)
        upper = rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)
        diag = 5 + rng.normal(size=n) + 1j * rng.normal(size=n)
        rhs = rng.normal(size=n) + 1j * rng.normal(size=n)
        x = thomas_solve(lower, diag, upper, rhs)
        np.testing.assert_allclose(dense(lower, diag, upper) @ x, rhs, atol=1e-12)

    def test_zero_pivot(self):
        with pytest.raises(NumericFailure):
            thomas_solve([1.0], [0.0, 1.0], [1.0], [1.0, 1.0])

    def test_band_mismatch(self):
        with pytest.raises(DimensionError):
            thomas_solve([1.0, 1.0], [1.0, 1.0], [1.0], [1.0, 1.0])


class TestStepper:
    """Test Crank-Nicolson steps against dense linear algebra."""

    @pytest.fixture
    def grid(self):
        return SpatialGrid(16)

    def test_woodbury_coupling_matches_dense(self, grid):
        rng = np.random.default_rng(3)
        potential = np.full(grid.size, 0.5)
        column = rng.normal(size=grid.size) + 1j * rng.normal(size=grid.size)
        row = 0.1 * (rng.normal(size=grid.size) + 1j * rng.normal(size=grid.size))
        dt = 1e-3
        stepper = CrankNicolsonStepper(
            grid, potential, 1.0, dt, right_gain=0.3 - 0.2j, couplings=[LowRankTerm(column, row)]
        )
        L = dense(*schrodinger_bands(grid, potential, 1.0, 0.3 - 0.2j)) + np.outer(column, row)
        z = np.cos(np.pi * grid.nodes) + 0.2j
        source = 0.1 * np.ones(grid.size)
        forcing = stepper.boundary_vector(0.4, -0.1) + source
        identity = np.eye(grid.size)
        expected = np.linalg.solve(
            identity - 0.5 * dt * L, (identity + 0.5 * dt * L) @ z + dt * forcing
        )
        result = stepper.step(z, source, 0.4, -0.1)
        np.testing.assert_allclose(result, expected, rtol=1e-10, atol=1e-12)

    def test_standalone_step_matches_stepper(self, grid):
        plant = PlantSpec.uniform(grid, q=1.0, h=0.5)
        z = grid.sample(lambda x: np.cos(np.pi * x) + 0.1j * x)
        stepper = CrankNicolsonStepper(grid, plant.h.values, plant.q, 1e-3)
        np.testing.assert_allclose(
            step_schrodinger(z, plant, 0.2, 0.1, None, 1e-3).values,
            stepper.step(z.values, None, 0.2, 0.1),
            atol=1e-12,
        )

    def test_constant_state_is_steady_without_robin_term(self, grid):
        stepper = CrankNicolsonStepper(grid, np.zeros(grid.size), 0.0, 1e-2)
        z = np.ones(grid.size, dtype=complex)
        for _ in range(10):
            z = stepper.step(z)
        np.testing.assert_allclose(z, 1.0, atol=1e-12)

    def test_norm_conserved_without_robin_term(self, grid):
        stepper = CrankNicolsonStepper(grid, np.zeros(grid.size), 0.0, 1e-3)
        z = grid.sample(lambda x: np.cos(np.pi * x) + 0.3j * x**2).values
        for _ in range(20):
            z_next = stepper.step(z)
            before, after = profile_norm(z, grid), profile_norm(z_next, grid)
            assert abs(after - before) <= 1e-10 * before
            z = z_next

    def test_nonpositive_dt(self, grid):
        with pytest.raises(ConfigError):
            CrankNicolsonStepper(grid, np.zeros(grid.size), 1.0, 0.0)


class TestTimeSeries:
    """Test recording and the series diagnostics."""

    def test_recorder(self):
        rec = SeriesRecorder()
        rec.record(0.0, {"a": 1.0, "b": 1j})
        rec.record(0.1, {"a": 2.0, "b": 2j})
        series = rec.freeze()
        assert series.names == ["a", "b"]
        assert not np.iscomplexobj(series.column("a"))
        assert np.iscomplexobj(series.column("b"))
        assert len(series) == 2

    def test_recorder_rejects_new_columns(self):
        rec = SeriesRecorder()
        rec.record(0.0, {"a": 1.0})
        with pytest.raises(DimensionError):
            rec.record(0.1, {"b": 1.0})

    def test_non_uniform_times(self):
        with pytest.raises(DimensionError):
            TimeSeries(np.array([0.0, 0.1, 0.3]), {"a": np.zeros(3)})

    def test_unknown_column(self):
        series = TimeSeries(np.array([0.0, 0.1]), {"a": np.zeros(2)})
        with pytest.raises(ConfigError, match="unknown column"):
            series.column("b")

    def test_decay_fit_exact(self):
        t = np.linspace(0, 2, 50)
        M, mu, r2 = decay_fit(t, 3 * np.exp(-2 * t))
        assert M == pytest.approx(3.0)
        assert mu == pytest.approx(2.0)
        assert r2 == pytest.approx(1.0)

    def test_decay_fit_through_oscillation(self):
        t = np.linspace(0, 10, 1001)
        _, mu, _ = decay_fit(t, np.exp(-t) * (2 + np.cos(10 * t)))
        assert mu == pytest.approx(1.0, rel=0.1)

    def test_decay_fit_needs_samples(self):
        t = np.linspace(0, 1, 50)
        with pytest.raises(ConfigError):
            decay_fit(t, np.exp(-t), (0.0, 0.1))

    def test_weighted_norm_and_ratio(self):
        t = np.linspace(0, 1, 101)
        series = TimeSeries(t, {"e_y": np.ones(101)})
        assert weighted_error_norm(series, 0.0) == pytest.approx(1.0)
        assert max_ratio_deviation(t, np.exp(-t), 1.0, 1.0) < 1e-12
        with pytest.raises(ConfigError):
            max_ratio_deviation(t, np.zeros(101), 1.0, 1.0)

    def test_boundedness_and_signal(self):
        t = np.linspace(0, 1, 11)
        series = TimeSeries(t, {"a": np.ones(11), "b": np.linspace(0, 1e4, 11), "c": 1j * t})
        assert boundedness(series, ["a", "b"]) == {"a": True, "b": False}
        signal = boundary_signal(series, "c")
        assert signal(0.25) == pytest.approx(0.25j)


class TestSimConfig:
    """Test run configuration validation."""

    def test_steps(self):
        cfg = SimConfig(SpatialGrid(8), 1e-3, 0.5, record_every=10, snapshot_every=100)
        assert cfg.steps == 500
        assert cfg.wants_record(20) and not cfg.wants_record(21)
        assert cfg.wants_snapshot(200) and not cfg.wants_snapshot(50)

    @pytest.mark.parametrize(
        "kwargs",
        [{"dt": 0.0}, {"horizon": 1e-5}, {"record_every": 0}, {"snapshot_every": -1}],
    )
    def test_invalid(self, kwargs):
        base = {"grid": SpatialGrid(8), "dt": 1e-3, "horizon": 1.0}
        base.update(kwargs)
        with pytest.raises(ConfigError):
            SimConfig(**base)


class TestInitialStates:
    """Test the compatible initial-data builders."""

    def test_observation_row(self):
        grid = SpatialGrid(10)
        C = ObservationFunctional(1.0, 0.35, grid.constant(0.5))
        z = grid.sample(lambda x: x)
        assert observation_row(C, grid) @ z.values == pytest.approx(0.35 + 0.25)

    def test_cosine_profile(self):
        grid = SpatialGrid(20)
        v = cosine_profile(grid, [1.0, 0.5])
        np.testing.assert_allclose(v.values, 1.0 + 0.5 * np.cos(np.pi * grid.nodes))

    def test_open_loop_state(self):
        grid = SpatialGrid(20)
        z0 = open_loop_initial_state(grid, 0.25)
        assert z0.values[0] == 0
        assert z0.values[-1] == pytest.approx(0.125)


class TestOpenLoop:
    """Test the open-loop plant."""

    @pytest.fixture
    def setting(self, coarse_ctx):
        E = dataclasses.replace(coarse_ctx.exosystem, w0=np.zeros(coarse_ctx.exosystem.n_w))
        plant = PlantSpec.uniform(coarse_ctx.grid, q=1.0)
        return plant, E

    def test_energy_grows(self, coarse_ctx, setting):
        plant, E = setting
        cfg = SimConfig(coarse_ctx.grid, 1e-3, 0.2)
        series = simulate_open_loop(plant, E, lambda t: 0.0, coarse_ctx.grid.constant(1.0), cfg)
        energy = np.asarray(series.column("E"))
        assert np.all(np.diff(energy) >= -1e-12)
        assert energy[-1] > energy[0]

    def test_divergence(self, coarse_ctx, setting):
        plant, E = setting
        cfg = SimConfig(coarse_ctx.grid, 1e-3, 0.1, divergence_cap=1e-3)
        with pytest.raises(DivergenceError) as exc_info:
            simulate_open_loop(plant, E, lambda t: 0.0, coarse_ctx.grid.constant(1.0), cfg)
        assert exc_info.value.exit_code == 4

    def test_wrong_grid(self, coarse_ctx, setting):
        plant, E = setting
        cfg = SimConfig(coarse_ctx.grid, 1e-3, 0.1)
        with pytest.raises(DimensionError):
            simulate_open_loop(plant, E, lambda t: 0.0, SpatialGrid(8).zeros(), cfg)


class TestTarget:
    """Test the damped Neumann target system."""

    @staticmethod
    def modal_error(n_cells: int, dt: float, c: float = 0.5, horizon: float = 0.5) -> float:
        grid = SpatialGrid(n_cells)
        steps = int(round(horizon / dt))
        cfg = SimConfig(grid, dt, horizon, record_every=steps, snapshot_every=steps)
        series = simulate_target(c, cosine_profile(grid, [0.0, 1.0]), None, cfg)
        exact = grid.sample(
            lambda x: np.exp((1j * np.pi**2 - c) * horizon) * np.cos(np.pi * x)
        )
        return (series.snapshots["v"][-1] - exact).norm()

    def test_exact_damping(self):
        grid = SpatialGrid(20)
        cfg = SimConfig(grid, 1e-3, 1.0)
        series = simulate_target(1.0, cosine_profile(grid, [0.0, 1.0]), None, cfg)
        assert max_ratio_deviation(series.times, series.magnitude("norm_v"), 1.0, 1.0) < 1e-2

    def test_matches_modal_solution(self):
        assert self.modal_error(40, 5e-4) < 1e-2

    def test_second_order_convergence(self):
        # spacing and dt halved together
        errors = [self.modal_error(n, 0.02 / n) for n in (20, 40, 80)]
        for coarse, fine in zip(errors, errors[1:]):
            assert coarse / fine == pytest.approx(4.0, rel=0.25)

    def test_norm_conserved_without_damping(self):
        grid = SpatialGrid(40)
        cfg = SimConfig(grid, 1e-3, 0.5)
        series = simulate_target(0.0, cosine_profile(grid, [0.2, 1.0, 0.0, 0.3j]), None, cfg)
        norms = series.magnitude("norm_v")
        assert float(np.max(np.abs(np.diff(norms)))) <= 1e-10 * norms[0]


class TestFirstOrderHold:
    """Test the sampled-input step of the reference estimator."""

    @pytest.fixture
    def system(self):
        return np.array([[-1.0, 1.0], [0.0, -2.0]]), np.array([1.0, 0.5])

    def test_constant_input(self, system):
        A, b = system
        dt = 0.1
        Phi, hold_old, hold_new = first_order_hold(A, b, dt)
        np.testing.assert_allclose(Phi, expm(A * dt), atol=1e-14)
        np.testing.assert_allclose(
            hold_old + hold_new, np.linalg.solve(A, (Phi - np.eye(2)) @ b), atol=1e-13
        )

    def test_ramp_input(self, system):
        A, b = system
        dt = 0.1
        Phi, _, hold_new = first_order_hold(A, b, dt)
        # x(0) = 0 and r(t) = t
        exact = np.linalg.solve(A @ A, (Phi - np.eye(2) - A * dt) @ b)
        np.testing.assert_allclose(hold_new * dt, exact, atol=1e-13)

    def test_estimator_tracks_reference_from_samples(self, coarse_ctx):
        E = coarse_ctx.exosystem
        l_r = coarse_ctx.gains.l_r
        dt = 1e-3
        Phi, hold_old, hold_new = first_order_hold(E.S_r + np.outer(l_r, E.q_r), -l_r, dt)
        w_r0 = E.w0[E.n_d :]
        error0 = np.array([0.3, -0.2])
        estimate = w_r0 + error0
        r_old = E.signals(E.w0)[2]
        steps = 2000
        for step in range(1, steps + 1):
            r_new = E.signals(E.state(step * dt))[2]
            estimate = Phi @ estimate + hold_old * r_old + hold_new * r_new
            r_old = r_new
        w_r = E.state(steps * dt)[E.n_d :]
        expected = expm((E.S_r + np.outer(l_r, E.q_r)) * steps * dt) @ error0
        np.testing.assert_allclose(estimate - w_r, expected, atol=5e-6)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            first_order_hold(np.eye(3), np.ones(2), 0.1)


class TestClosedLoops:
    """Closed-loop runs of the reference scenario."""

    def test_target_decay_under_state_feedback(self, fine_ctx):
        E = dataclasses.replace(fine_ctx.exosystem, w0=np.zeros(fine_ctx.exosystem.n_w))
        z0 = target_initial_state(fine_ctx.gains, E.w0, [0.0, 0.5, 0.0, 0.2])
        cfg = fine_ctx.sim_config(horizon=1.0)
        series = simulate_state_feedback(fine_ctx.plant, E, fine_ctx.gains, fine_ctx.observation, z0, cfg)
        deviation = max_ratio_deviation(series.times, series.magnitude("norm_v_tilde"), 1.0, 1.0)
        assert deviation < 0.05

    def test_manifold_keeps_error_small(self, fine_ctx):
        z0 = manifold_state(fine_ctx.gains, fine_ctx.w0)
        cfg = fine_ctx.sim_config(horizon=1.0)
        series = simulate_state_feedback(
            fine_ctx.plant, fine_ctx.exosystem, fine_ctx.gains, fine_ctx.observation, z0, cfg
        )
        assert float(np.max(series.magnitude("e_y"))) < 2e-2

    def test_exact_observer_stays_exact(self, coarse_ctx):
        E = coarse_ctx.exosystem
        z0 = open_loop_initial_state(coarse_ctx.grid, E.p2 @ coarse_ctx.w0)
        cfg = coarse_ctx.sim_config(horizon=0.5)
        series = simulate_observer(
            coarse_ctx.plant, E, coarse_ctx.gains, lambda t: 0.0, cfg, z0, z0, coarse_ctx.w0
        )
        for name in ("norm_z_tilde", "norm_w_tilde_d", "norm_w_tilde_r", "norm_e_tilde"):
            assert float(np.max(series.magnitude(name))) < 1e-3

    def test_reference_error_decays_at_slowest_pole(self, coarse_ctx):
        E0 = coarse_ctx.exosystem
        gains = coarse_ctx.gains
        w0 = np.zeros(E0.n_w)
        w0[E0.n_d] = 1.0
        E = dataclasses.replace(E0, w0=w0)
        what0 = np.zeros(E.n_w)
        horizon = 8.0
        cfg = SimConfig(coarse_ctx.grid, 1e-3, horizon, record_every=10)
        series = simulate_observer(
            coarse_ctx.plant, E, gains, lambda t: 0.0, cfg, coarse_ctx.grid.zeros(),
            coarse_ctx.grid.zeros(), what0,
        )
        A_r = E.S_r + np.outer(gains.l_r, E.q_r)
        slowest = -float(np.max(np.linalg.eigvals(A_r).real))
        _, rate, _ = decay_fit(
            series.times, series.magnitude("norm_w_tilde_r"), (0.5 * horizon, horizon)
        )
        assert rate == pytest.approx(slowest, rel=0.1)

    def test_output_feedback_records(self, coarse_ctx):
        E = coarse_ctx.exosystem
        gains = coarse_ctx.gains
        z0 = target_initial_state(gains, coarse_ctx.w0, [0.0, 0.5])
        w_error = np.full(E.n_w, 0.1)
        zhat0 = z0 + observer_initial_error(gains, w_error[: E.n_d], [0.1, 0.3])
        cfg = coarse_ctx.sim_config(horizon=0.2, snapshot_every=50)
        series = simulate_output_feedback(
            coarse_ctx.plant, E, gains, coarse_ctx.observation, cfg, z0, zhat0, coarse_ctx.w0 + w_error
        )
        assert series.names[0] == "e_y"
        assert {"norm_z_hat", "norm_e_tilde", "target_right", "w_hat_0"} <= set(series.names)
        assert np.all(np.isfinite(series.magnitude("norm_z")))
        assert len(series.snapshot_times) == 5
        assert snapshot_distance(series, "z", series, "z") == 0.0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

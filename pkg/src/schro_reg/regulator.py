"""
Regulator equations, observer gains and the assembled GainSet.

Both regulator equations are solved mode by mode on the eigenvectors of the exosystem.
For an eigenpair (lambda, v) the projected profile solves

    f'' = a f + s(x),    a = i (lambda + c),    s = -i (source . v),

whose solutions are cosh(mu x), sinh(mu x)/mu (mu the principal root of a) plus the
particular convolution int_0^x sinh(mu (x - xi))/mu s(xi) dxi. The two boundary data fix
the free coefficients; the profiles are then recombined through V^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike
from scipy.optimize import linear_sum_assignment

from schro_reg.config import (
    IMAG_RESIDUE_TOL,
    POLE_PLACEMENT_TOL,
    REGULATOR_FD_FACTOR,
    SOLVABILITY_TOL,
)
from schro_reg.core import (
    ComplexArray,
    ComplexProfile,
    ExosystemSpec,
    KernelGrid,
    ModalData,
    ObservationFunctional,
    PlantSpec,
    RealArray,
    SpatialGrid,
    evaluate_Ce,
    triangle_weights,
)
from schro_reg.errors import (
    ConfigError,
    DimensionError,
    HypothesisError,
    PolePlacementError,
    SolvabilityError,
)
from schro_reg.kernels import (
    KernelSet,
    apply_forward,
    apply_inverse,
    apply_observer_forward,
    apply_observer_inverse,
    build_kernels,
    kernel_feedback_trace,
    observer_feedback_trace,
)

DEGENERATE_TOL = 1e-12
_ObservedInverse = Callable[[ComplexArray], complex]


@dataclass(frozen=True, eq=False)
class GainSet:
    """Everything the closed loops need: kernels, regulator profiles and observer gains.

    Attributes:
        kernels: Control and observer kernels with their reciprocals
        m: n_w components of the state regulator profile m(x)
        m_w: m'(1), the exosystem feedback gain
        n: n_d components of the observer regulator profile n(x)
        l_profile: Distributed observer injection l(x)
        l0: Boundary observer gain p(1, 1)
        l_d: Disturbance observer gain (complex in general)
        l_r: Reference observer gain
    """

    kernels: KernelSet
    m: tuple[ComplexProfile, ...]
    m_w: ComplexArray
    n: tuple[ComplexProfile, ...]
    l_profile: ComplexProfile
    l0: complex
    l_d: ComplexArray
    l_r: RealArray

    def __post_init__(self):
        grid = self.kernels.grid
        for profile in (*self.m, *self.n, self.l_profile):
            if profile.grid != grid:
                raise DimensionError("gain profiles and kernels live on different grids")
        if np.shape(self.m_w) != (len(self.m),):
            raise DimensionError("m_w must have one entry per component of m")
        if np.shape(self.l_d) != (len(self.n),):
            raise DimensionError("l_d must have one entry per component of n")
        object.__setattr__(self, "m_w", np.asarray(self.m_w, dtype=complex))
        object.__setattr__(self, "l_d", np.asarray(self.l_d, dtype=complex))
        object.__setattr__(self, "l_r", np.asarray(self.l_r, dtype=float))
        object.__setattr__(self, "l0", complex(self.l0))

    @property
    def grid(self) -> SpatialGrid:
        return self.kernels.grid

    @cached_property
    def m_matrix(self) -> ComplexArray:
        """m(x_i)^T stacked as rows, shape (nodes, n_w)."""
        if not self.m:
            return np.zeros((self.grid.size, 0), dtype=complex)
        return np.column_stack([p.values for p in self.m])

    @cached_property
    def n_matrix(self) -> ComplexArray:
        """n(x_i)^T stacked as rows, shape (nodes, n_d)."""
        if not self.n:
            return np.zeros((self.grid.size, 0), dtype=complex)
        return np.column_stack([p.values for p in self.n])

    @cached_property
    def control_trace(self) -> tuple[complex, ComplexProfile]:
        return kernel_feedback_trace(self.kernels.k)

    @property
    def k11(self) -> complex:
        return self.control_trace[0]

    @property
    def kx1(self) -> ComplexProfile:
        return self.control_trace[1]

    @property
    def n_at_right(self) -> ComplexArray:
        return self.n_matrix[-1, :]


@dataclass(frozen=True)
class ModeProfiles:
    """Values and first two derivatives of the recombined regulator profile."""

    values: ComplexArray
    first: ComplexArray
    second: ComplexArray


@dataclass(frozen=True)
class RegulatorResiduals:
    """Residuals of the m and n equations.

    The closed-form ODE residuals only confirm the assembly of the carried derivatives.
    The centered-difference residuals are independent of the representation and must
    stay below their second-order bounds.
    """

    m_ode: float
    m_left: float
    m_nonlocal: float
    m_finite_difference: float
    m_w_gap: float
    n_ode: float
    n_left: float
    n_right: float
    n_finite_difference: float
    m_fd_bound: float = np.inf
    n_fd_bound: float = np.inf

    @property
    def worst_closed_form(self) -> float:
        return max(self.m_ode, self.m_left, self.n_ode, self.n_left, self.n_right)

    @property
    def finite_difference_ok(self) -> bool:
        return (
            self.m_finite_difference <= self.m_fd_bound
            and self.n_finite_difference <= self.n_fd_bound
        )


def _fundamental(a: complex, x: RealArray) -> tuple[ComplexArray, ComplexArray]:
    """cosh(mu x) and sinh(mu x)/mu for mu^2 = a, with the a -> 0 limits 1 and x."""
    if abs(a) < DEGENERATE_TOL:
        return np.ones_like(x, dtype=complex), x.astype(complex)
    mu = np.sqrt(complex(a))
    return np.cosh(mu * x), np.sinh(mu * x) / mu


def _convolutions(
    a: complex, source: ComplexArray, grid: SpatialGrid
) -> tuple[ComplexArray, ComplexArray]:
    """int_0^x S(x - xi) s dxi and int_0^x C(x - xi) s dxi at every node."""
    x = grid.nodes
    lag = x[:, None] - x[None, :]
    weights = triangle_weights(grid, "lower")
    lag_c, lag_s = _fundamental(a, np.where(lag >= 0, lag, 0.0))
    return (weights * lag_s) @ source, (weights * lag_c) @ source


def _recombine(modes: list[ModeProfiles], modal: ModalData, grid: SpatialGrid) -> ModeProfiles:
    if not modes:
        empty = np.zeros((grid.size, 0), dtype=complex)
        return ModeProfiles(empty, empty, empty)

    def combine(field: str) -> ComplexArray:
        return np.column_stack([getattr(mode, field) for mode in modes]) @ modal.inverse

    return ModeProfiles(combine("values"), combine("first"), combine("second"))


def _as_profiles(values: ComplexArray, grid: SpatialGrid) -> tuple[ComplexProfile, ...]:
    return tuple(ComplexProfile(grid, values[:, j]) for j in range(values.shape[1]))


def _sqrt_arg(eigenvalue: complex, c: float) -> complex:
    return 1j * (complex(eigenvalue) + c)


def _state_closure(C: ObservationFunctional, K: KernelGrid) -> _ObservedInverse:
    def observe(values: ComplexArray) -> complex:
        return evaluate_Ce(C, apply_inverse(K, ComplexProfile(K.grid, values)))

    return observe


def check_state_solvability(
    C: ObservationFunctional, K: KernelGrid, S_eigs: Sequence[complex], c_s: float
) -> list[complex]:
    """Margins C_e F^{-1}[cosh(mu x)] with mu = sqrt(i (lambda + c_s)), one per eigenvalue.

    Raises:
        SolvabilityError: If a margin has modulus below the solvability tolerance
    """
    if C.grid != K.grid:
        raise DimensionError("observation weight and kernel live on different grids")
    observe = _state_closure(C, K)
    margins = []
    for lam in S_eigs:
        cosh_profile, _ = _fundamental(_sqrt_arg(lam, c_s), K.grid.nodes)
        margin = observe(cosh_profile)
        logger.debug(f"State solvability margin at lambda={complex(lam):.6g}: |{abs(margin):.3e}|")
        if abs(margin) < SOLVABILITY_TOL:
            raise SolvabilityError(
                f"state-regulator condition fails at lambda={complex(lam):.6g}: "
                f"C_e F^-1[cosh] = {margin:.3e}",
                condition="state-regulator",
                eigenvalue=complex(lam),
                margin=abs(margin),
            )
        margins.append(margin)
    return margins


def _solve_m_modes(
    plant: PlantSpec,
    kernels: KernelSet,
    E: ExosystemSpec,
    C: ObservationFunctional,
    c_s: float,
) -> ModeProfiles:
    grid = kernels.grid
    plant = plant.on(grid)
    C = ObservationFunctional(C.theta, C.x0, C.c.resample(grid))
    modal = E.modal
    check_state_solvability(C, kernels.K, modal.eigenvalues, c_s)
    observe = _state_closure(C, kernels.K)

    Fg = apply_forward(kernels.k, plant.g).values
    k_edge = kernels.k.values[:, 0]
    x = grid.nodes
    modes = []
    for j, lam in enumerate(modal.eigenvalues):
        v = modal.vectors[:, j]
        a = _sqrt_arg(lam, c_s)
        if abs(a) < DEGENERATE_TOL:
            logger.warning(f"Regulator mode lambda={lam:.6g} sits on the degenerate branch")
        source = -1j * (Fg * (E.p1 @ v) - 1j * k_edge * (E.p2 @ v))
        cosh_x, sinh_x = _fundamental(a, x)
        part, part_x = _convolutions(a, source, grid)
        gamma2 = E.p2 @ v
        gamma1 = (E.pr @ v - gamma2 * observe(sinh_x) - observe(part)) / observe(cosh_x)
        values = gamma1 * cosh_x + gamma2 * sinh_x + part
        first = gamma1 * a * sinh_x + gamma2 * cosh_x + part_x
        second = a * values + source
        modes.append(ModeProfiles(values, first, second))
    return _recombine(modes, modal, grid)


def _right_slope(values: ComplexArray, spacing: float) -> ComplexArray:
    return (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * spacing)


def solve_m(
    plant: PlantSpec,
    kernels: KernelSet,
    E: ExosystemSpec,
    C: ObservationFunctional,
    c_s: float,
) -> tuple[tuple[ComplexProfile, ...], ComplexArray]:
    """State regulator profile m and the feedback gain m_w = m'(1).

    Raises:
        SolvabilityError: If C_e F^{-1}[cosh] vanishes at some exosystem eigenvalue
    """
    grid = kernels.grid
    profiles = _solve_m_modes(plant, kernels, E, C, c_s)
    m_w = _right_slope(profiles.values, grid.spacing) if E.n_w else np.zeros(0, dtype=complex)
    logger.info(f"Solved state regulator equations for {E.n_w} exosystem modes")
    return _as_profiles(profiles.values, grid), m_w


def _solve_n_modes(
    plant: PlantSpec, kernels: KernelSet, E: ExosystemSpec, c_o: float
) -> ModeProfiles:
    grid = kernels.grid
    plant = plant.on(grid)
    modal = E.d_modal
    g_tilde = apply_observer_inverse(kernels.P, plant.g).values
    x = grid.nodes
    modes = []
    for j, lam in enumerate(modal.eigenvalues):
        v = modal.vectors[:, j]
        a = _sqrt_arg(lam, c_o)
        source = -1j * g_tilde * (E.q_d1 @ v)
        cosh_x, sinh_x = _fundamental(a, x)
        part, part_x = _convolutions(a, source, grid)
        gamma2 = E.q_d2 @ v
        if abs(a) < DEGENERATE_TOL:
            mismatch = abs(gamma2 + part_x[-1])
            if mismatch > SOLVABILITY_TOL * max(1.0, abs(gamma2)):
                raise SolvabilityError(
                    f"observer-regulator compatibility fails at lambda={lam:.6g} "
                    f"(mismatch {mismatch:.3e})",
                    condition="observer-regulator",
                    eigenvalue=complex(lam),
                    margin=mismatch,
                )
            logger.warning(f"Observer regulator mode lambda={lam:.6g} is not unique; using gamma1=0")
            gamma1 = 0.0
        else:
            mu = np.sqrt(a)
            margin = np.sinh(mu)
            if abs(margin) <= SOLVABILITY_TOL:
                raise SolvabilityError(
                    f"observer-regulator condition fails at lambda={lam:.6g}: "
                    f"sinh(sqrt(i(lambda + c_o))) = {margin:.3e}",
                    condition="observer-regulator",
                    eigenvalue=complex(lam),
                    margin=abs(margin),
                )
            gamma1 = -(gamma2 * np.cosh(mu) + part_x[-1]) / (mu * margin)
        values = gamma1 * cosh_x + gamma2 * sinh_x + part
        first = gamma1 * a * sinh_x + gamma2 * cosh_x + part_x
        second = a * values + source
        modes.append(ModeProfiles(values, first, second))
    return _recombine(modes, modal, grid)


def solve_n(
    plant: PlantSpec, kernels: KernelSet, E: ExosystemSpec, c_o: float
) -> tuple[ComplexProfile, ...]:
    """Observer regulator profile n with n'(0) = q_d2 and n'(1) = 0.

    Raises:
        SolvabilityError: If sinh(sqrt(i (lambda + c_o))) vanishes for some lambda in S_d,
            or the degenerate branch is incompatible
    """
    profiles = _solve_n_modes(plant, kernels, E, c_o)
    logger.info(f"Solved observer regulator equations for {E.n_d} disturbance modes")
    return _as_profiles(profiles.values, kernels.grid)


def placement_mismatch(closed: ArrayLike, desired: Sequence[complex]) -> float:
    """Largest distance between eig(closed) and the desired poles under the best pairing."""
    placed = np.linalg.eigvals(np.asarray(closed))
    targets = np.asarray(desired, dtype=complex).reshape(-1)
    if placed.size != targets.size:
        raise DimensionError(f"{placed.size} eigenvalues against {targets.size} desired poles")
    if not targets.size:
        return 0.0
    distance = np.abs(placed[:, None] - targets[None, :])
    rows, cols = linear_sum_assignment(distance)
    return float(np.max(distance[rows, cols]))


def place_poles(c: ArrayLike, M: ArrayLike, desired: Sequence[complex]) -> np.ndarray:
    """Gain l with eig(M + l c) = desired, by Ackermann's formula on the pair (M^T, c^T).

    A real (c, M) with a conjugation-closed desired set yields a real gain; a complex row c
    yields a complex gain.

    Raises:
        PolePlacementError: If (c, M) is unobservable, a desired pole is not in the open
            left half-plane, or the gain of a real problem has a complex residue
    """
    M = np.asarray(M)
    c = np.asarray(c).reshape(-1)
    n = M.shape[0] if M.ndim == 2 else 0
    if M.size and (M.ndim != 2 or M.shape != (n, n)):
        raise DimensionError(f"M must be square, got shape {M.shape}")
    if c.size != n:
        raise DimensionError(f"c must have length {n}, got {c.size}")
    poles = np.asarray(desired, dtype=complex).reshape(-1)
    if poles.size != n:
        raise ConfigError(f"need {n} desired poles, got {poles.size}")
    if n == 0:
        return np.zeros(0)
    if np.any(poles.real >= 0):
        raise PolePlacementError(f"desired poles must have negative real part: {poles}")

    real_problem = not np.iscomplexobj(c) and not np.iscomplexobj(M)
    At = M.T.astype(complex)
    ctrb = np.column_stack([np.linalg.matrix_power(At, k) @ c for k in range(n)])
    if np.linalg.matrix_rank(ctrb) < n:
        raise PolePlacementError("(c, M) is not observable; pole placement invalid")

    coeffs = np.poly(poles)
    phi = sum(coeffs[n - k] * np.linalg.matrix_power(At, k) for k in range(n + 1))
    gain = -np.linalg.solve(ctrb, phi)[-1, :]

    if real_problem:
        residue = float(np.max(np.abs(gain.imag)))
        if residue > IMAG_RESIDUE_TOL * max(1.0, float(np.max(np.abs(gain)))):
            raise PolePlacementError(
                f"gain has complex residue {residue:.3e}; desired set not closed under conjugation"
            )
        gain = gain.real

    mismatch = placement_mismatch(M + np.outer(gain, c), poles)
    logger.debug(f"Placed {n} poles, max mismatch {mismatch:.2e}")
    if mismatch > POLE_PLACEMENT_TOL * max(1.0, float(np.max(np.abs(poles)))):
        raise PolePlacementError(f"placed poles miss the targets by {mismatch:.3e}")
    return gain


def _hypothesis_violations(A_r: np.ndarray, A_d: np.ndarray) -> list[str]:
    violations = []
    eig_r = np.linalg.eigvals(A_r) if A_r.size else np.zeros(0)
    eig_d = np.linalg.eigvals(A_d) if A_d.size else np.zeros(0)
    for name, eig in (("S_r + l_r q_r^T", eig_r), ("S_d + l_d n(1)^T", eig_d)):
        if np.any(eig.real >= 0):
            violations.append(f"{name} is not Hurwitz: {eig}")
        for i in range(eig.size):
            for j in range(i + 1, eig.size):
                if abs(eig[i] - eig[j]) <= 1e-9 * max(1.0, abs(eig[i])):
                    violations.append(f"{name} has a repeated eigenvalue {eig[i]:.6g}")
    for lr in eig_r:
        for ld in eig_d:
            if abs(lr - ld) <= 1e-9 * max(1.0, abs(lr)):
                violations.append(f"placed eigenvalue {lr:.6g} shared by both observer blocks")
    return violations


def assemble_gains(
    plant: PlantSpec,
    E: ExosystemSpec,
    C: ObservationFunctional,
    c_s: float,
    c_o: float,
    desired_r: Sequence[complex],
    desired_d: Sequence[complex],
    grid: SpatialGrid,
    kernels: KernelSet | None = None,
) -> GainSet:
    """Solve kernels, both regulator equations and place the observer poles.

    Raises:
        SolvabilityError: From either regulator equation
        PolePlacementError: If a gain cannot be placed
        HypothesisError: If placed eigenvalues are not simple, not stable, or collide
    """
    plant = plant.on(grid)
    if kernels is None:
        kernels = build_kernels(plant, c_s, c_o, grid)
    elif kernels.grid != grid:
        raise DimensionError("precomputed kernels live on a different grid")

    m, m_w = solve_m(plant, kernels, E, C, c_s)
    n = solve_n(plant, kernels, E, c_o)
    n1 = np.array([p.values[-1] for p in n], dtype=complex)

    l_r = place_poles(E.q_r, E.S_r, desired_r)
    l_d = place_poles(n1, E.S_d, desired_d) if E.n_d else np.zeros(0, dtype=complex)

    violations = _hypothesis_violations(
        E.S_r + np.outer(l_r, E.q_r), E.S_d + np.outer(l_d, n1)
    )
    if violations:
        raise HypothesisError(violations)

    l0, p_xi = observer_feedback_trace(kernels.p)
    injection = grid.zeros()
    for component, gain in zip(n, l_d):
        injection = injection + component * complex(gain)
    l_profile = apply_observer_forward(kernels.p, injection) - p_xi * 1j

    logger.info(f"Assembled gains: |m_w|={np.linalg.norm(m_w):.4g}, l0={l0:.4g}")
    return GainSet(kernels, m, m_w, n, l_profile, l0, l_d, l_r)


def regulator_residuals(
    plant: PlantSpec,
    E: ExosystemSpec,
    C: ObservationFunctional,
    gains: GainSet,
) -> RegulatorResiduals:
    """Residuals of both regulator equations.

    Closed-form residuals use the derivatives carried by the representation. The
    finite-difference ODE residuals apply a centered second difference to the sampled
    profile and carry bounds of REGULATOR_FD_FACTOR * spacing^2 * (1 + max|a|)^2 * scale,
    with a = i (lambda + c) over the modes and scale the larger of 1, sup|profile| and
    sup|source|.
    """
    kernels = gains.kernels
    grid = kernels.grid
    plant = plant.on(grid)
    d = grid.spacing

    m_prof = _solve_m_modes(plant, kernels, E, C, kernels.c_s)
    Fg = apply_forward(kernels.k, plant.g).values
    k_edge = kernels.k.values[:, 0]
    m_src = np.outer(Fg, E.p1) - 1j * np.outer(k_edge, E.p2)
    m_lhs = 1j * m_prof.second + m_prof.values @ E.S + kernels.c_s * m_prof.values
    m_ode = _sup(m_lhs - m_src)
    m_left = _sup(m_prof.first[0] - E.p2)
    C_grid = ObservationFunctional(C.theta, C.x0, C.c.resample(grid))
    observe = _state_closure(C_grid, kernels.K)
    nonlocal_values = np.array(
        [observe(m_prof.values[:, j]) for j in range(E.n_w)], dtype=complex
    )
    m_nonlocal = _sup(nonlocal_values - E.pr)
    m_fd = _sup(
        1j * _second_difference(m_prof.values, d)
        + (m_prof.values @ E.S + kernels.c_s * m_prof.values - m_src)[1:-1]
    )
    m_w_gap = _sup(gains.m_w - m_prof.first[-1]) if E.n_w else 0.0

    n_prof = _solve_n_modes(plant, kernels, E, kernels.c_o)
    g_tilde = apply_observer_inverse(kernels.P, plant.g).values
    n_src = np.outer(g_tilde, E.q_d1)
    n_lhs = 1j * n_prof.second + n_prof.values @ E.S_d + kernels.c_o * n_prof.values
    n_fd = _sup(
        1j * _second_difference(n_prof.values, d)
        + (n_prof.values @ E.S_d + kernels.c_o * n_prof.values - n_src)[1:-1]
    )
    return RegulatorResiduals(
        m_ode=m_ode,
        m_left=m_left,
        m_nonlocal=m_nonlocal,
        m_finite_difference=m_fd,
        m_w_gap=m_w_gap,
        n_ode=_sup(n_lhs - n_src),
        n_left=_sup(n_prof.first[0] - E.q_d2),
        n_right=_sup(n_prof.first[-1]),
        n_finite_difference=n_fd,
        m_fd_bound=_fd_bound(m_prof.values, m_src, E.modal.eigenvalues, kernels.c_s, d),
        n_fd_bound=_fd_bound(n_prof.values, n_src, E.d_modal.eigenvalues, kernels.c_o, d),
    )


def _fd_bound(
    values: ComplexArray, source: ComplexArray, eigenvalues: ArrayLike, c: float, spacing: float
) -> float:
    eigs = np.asarray(eigenvalues, dtype=complex)
    rate = float(np.max(np.abs(1j * (eigs + c)), initial=0.0))
    scale = max(1.0, _sup(values), _sup(source))
    return REGULATOR_FD_FACTOR * spacing**2 * (1.0 + rate) ** 2 * scale


def _second_difference(values: ComplexArray, spacing: float) -> ComplexArray:
    return (values[2:] - 2 * values[1:-1] + values[:-2]) / spacing**2


def _sup(values: ArrayLike) -> float:
    return float(np.max(np.abs(np.asarray(values)), initial=0.0))

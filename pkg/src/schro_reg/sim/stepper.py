"""
Crank-Nicolson time stepping for z_t = -i z_xx + h z + source.

Boundary conditions z_x(0) = -i q z(0) + a_0 and z_x(1) = kappa z(1) + a_1 enter through
ghost nodes, second order in the spacing. Fixed rank-one couplings u (v . z) (nonlocal
feedback integrals, observer injections) are implicit through a Woodbury correction, so each
step is one banded solve plus a few dot products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import LinAlgError, solve_banded

from schro_reg.core import ComplexArray, ComplexProfile, PlantSpec, SpatialGrid
from schro_reg.errors import ConfigError, DimensionError, NumericFailure


@dataclass(frozen=True, eq=False)
class LowRankTerm:
    """Contribution column * (row . z) to the right-hand side."""

    column: ComplexArray
    row: ComplexArray


def thomas_solve(
    lower: ArrayLike, diag: ArrayLike, upper: ArrayLike, rhs: ArrayLike
) -> ComplexArray:
    """Solve a complex tridiagonal system by the Thomas recurrence.

    lower[i] multiplies x[i] in row i + 1, upper[i] multiplies x[i + 1] in row i.

    Raises:
        NumericFailure: On a zero pivot
    """
    a = np.asarray(lower, dtype=complex)
    b = np.asarray(diag, dtype=complex)
    c = np.asarray(upper, dtype=complex)
    d = np.asarray(rhs, dtype=complex)
    n = b.size
    if a.size != n - 1 or c.size != n - 1 or d.size != n:
        raise DimensionError("tridiagonal bands do not match the system size")
    c_star = np.empty(max(n - 1, 0), dtype=complex)
    d_star = np.empty(n, dtype=complex)
    pivot = b[0]
    if pivot == 0:
        raise NumericFailure("zero pivot in tridiagonal solve at row 0")
    if n > 1:
        c_star[0] = c[0] / pivot
    d_star[0] = d[0] / pivot
    for i in range(1, n):
        pivot = b[i] - a[i - 1] * c_star[i - 1]
        if pivot == 0:
            raise NumericFailure(f"zero pivot in tridiagonal solve at row {i}")
        if i < n - 1:
            c_star[i] = c[i] / pivot
        d_star[i] = (d[i] - a[i - 1] * d_star[i - 1]) / pivot
    x = np.empty(n, dtype=complex)
    x[-1] = d_star[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d_star[i] - c_star[i] * x[i + 1]
    return x


def schrodinger_bands(
    grid: SpatialGrid, potential: ArrayLike, q: float, right_gain: complex = 0.0
) -> tuple[ComplexArray, ComplexArray, ComplexArray]:
    """(lower, diag, upper) of the discrete operator with ghost-node boundary rows."""
    n = grid.n_cells
    d = grid.spacing
    r = -1j / d**2
    diag = np.full(n + 1, -2 * r, dtype=complex) + np.asarray(potential, dtype=complex)
    upper = np.full(n, r, dtype=complex)
    lower = np.full(n, r, dtype=complex)
    upper[0] = 2 * r
    lower[-1] = 2 * r
    diag[0] += 2 * q / d
    diag[-1] += -2j * right_gain / d
    return lower, diag, upper


def _tridiagonal_apply(
    lower: ComplexArray, diag: ComplexArray, upper: ComplexArray, z: ComplexArray
) -> ComplexArray:
    out = diag * z
    out[:-1] += upper * z[1:]
    out[1:] += lower * z[:-1]
    return out


class CrankNicolsonStepper:
    """Fixed-step Crank-Nicolson integrator on one grid.

    Args:
        grid: Spatial grid
        potential: Nodal values of the zeroth-order coefficient h
        q: Robin parameter at x = 0
        dt: Time step
        right_gain: Implicit collocated coefficient kappa at x = 1
        couplings: Implicit rank-one terms
    """

    def __init__(
        self,
        grid: SpatialGrid,
        potential: ArrayLike,
        q: float,
        dt: float,
        right_gain: complex = 0.0,
        couplings: Sequence[LowRankTerm] = (),
    ):
        if dt <= 0:
            raise ConfigError(f"time step must be positive, got {dt}")
        self.grid = grid
        self.dt = dt
        self._lower, self._diag, self._upper = schrodinger_bands(grid, potential, q, right_gain)
        half = 0.5 * dt
        ab = np.zeros((3, grid.size), dtype=complex)
        ab[0, 1:] = -half * self._upper
        ab[1] = 1.0 - half * self._diag
        ab[2, :-1] = -half * self._lower
        self._banded = ab

        if couplings:
            self._U = np.column_stack([np.asarray(t.column, dtype=complex) for t in couplings])
            self._V = np.vstack([np.asarray(t.row, dtype=complex) for t in couplings])
            if self._U.shape[0] != grid.size or self._V.shape[1] != grid.size:
                raise DimensionError("coupling vectors do not match the grid")
            self._Y = self._solve(self._U)
            capacitance = np.eye(len(couplings)) - half * (self._V @ self._Y)
            self._capacitance = np.linalg.inv(capacitance)
        else:
            self._U = None

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        try:
            x = solve_banded((1, 1), self._banded, rhs, check_finite=False)
        except (LinAlgError, ValueError) as e:
            raise NumericFailure(f"Crank-Nicolson solve failed: {e}") from e
        return x

    def boundary_vector(self, left: complex, right: complex) -> ComplexArray:
        b = np.zeros(self.grid.size, dtype=complex)
        b[0] = 2j * left / self.grid.spacing
        b[-1] = -2j * right / self.grid.spacing
        return b

    def apply_operator(self, z: ArrayLike) -> ComplexArray:
        """Discrete right-hand side without sources or boundary data."""
        z = np.asarray(z, dtype=complex)
        out = _tridiagonal_apply(self._lower, self._diag, self._upper, z)
        if self._U is not None:
            out = out + self._U @ (self._V @ z)
        return out

    def step(
        self,
        z: ArrayLike,
        source: ArrayLike | None = None,
        left: complex = 0.0,
        right: complex = 0.0,
    ) -> ComplexArray:
        """Advance one step; source, left and right are half-step values.

        Raises:
            NumericFailure: If the solve fails or produces non-finite values
        """
        z = np.asarray(z, dtype=complex)
        forcing = self.boundary_vector(left, right)
        if source is not None:
            forcing = forcing + source
        rhs = z + 0.5 * self.dt * self.apply_operator(z) + self.dt * forcing
        x = self._solve(rhs)
        if self._U is not None:
            x = x + self._Y @ (self._capacitance @ (0.5 * self.dt * (self._V @ x)))
        if not np.all(np.isfinite(x)):
            raise NumericFailure("Crank-Nicolson step produced non-finite values")
        return x


def step_schrodinger(
    z: ComplexProfile,
    plant: PlantSpec,
    bc_left: complex,
    bc_right: complex,
    source: ComplexProfile | None,
    dt: float,
) -> ComplexProfile:
    """One standalone Crank-Nicolson step of the plant with explicit boundary data.

    bc_left is d_2 in z_x(0) = -i q z(0) + d_2, bc_right is u in z_x(1) = u; both, like the
    source, are half-step values supplied by the caller.
    """
    if dt <= 0:
        raise ConfigError(f"time step must be positive, got {dt}")
    grid = z.grid
    plant = plant.on(grid)
    lower, diag, upper = schrodinger_bands(grid, plant.h.values, plant.q)
    half = 0.5 * dt
    rhs = z.values + half * _tridiagonal_apply(lower, diag, upper, z.values)
    rhs[0] += dt * 2j * bc_left / grid.spacing
    rhs[-1] += -dt * 2j * bc_right / grid.spacing
    if source is not None:
        rhs = rhs + dt * source.resample(grid).values
    x = thomas_solve(-half * lower, 1.0 - half * diag, -half * upper, rhs)
    return ComplexProfile(grid, x)

"""
Backstepping kernels and the Volterra transformations they define.

The control kernel k lives on the lower triangle 0 <= xi <= x <= 1 and solves

    k_xx - k_xixi = i (h(xi) + c_s) k,
    k_xi(x, 0) + q i k(x, 0) = 0,
    k(x, x) = -(i/2) int_0^x (h + c_s) - q i.

The observer kernel p lives on the upper triangle and is the transpose of the same
problem solved with c_o. Reciprocal kernels K and P come from the reciprocity Volterra
equations, so F^{-1} F = Id holds up to quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from loguru import logger
from scipy.integrate import cumulative_trapezoid

from schro_reg.config import (
    KERNEL_MAX_ITER,
    KERNEL_TOL,
    MIN_KERNEL_CELLS,
    RECIPROCAL_MAX_ITER,
    RECIPROCAL_TOL,
)
from schro_reg.core import (
    ComplexProfile,
    KernelGrid,
    Orientation,
    PlantSpec,
    RealArray,
    SpatialGrid,
    triangle_weights,
)
from schro_reg.errors import ConfigError, DimensionError, KernelSolveError


@dataclass(frozen=True, eq=False)
class KernelSet:
    """Control kernel k, its reciprocal K, observer kernel p and its reciprocal P."""

    k: KernelGrid
    K: KernelGrid
    p: KernelGrid
    P: KernelGrid
    c_s: float
    c_o: float

    def __post_init__(self):
        for name, expected in (("k", "lower"), ("K", "lower"), ("p", "upper"), ("P", "upper")):
            kernel: KernelGrid = getattr(self, name)
            if kernel.orientation != expected:
                raise DimensionError(f"kernel {name} must be {expected}-triangular")
            if kernel.grid != self.k.grid:
                raise DimensionError(f"kernel {name} lives on a different grid")

    @property
    def grid(self) -> SpatialGrid:
        return self.k.grid


@dataclass(frozen=True)
class GoursatReport:
    iterations: int
    update: float


def potential_on(plant: PlantSpec, grid: SpatialGrid) -> RealArray:
    """Real potential h sampled on grid (linear interpolation if the grids differ)."""
    if grid == plant.grid:
        return np.asarray(plant.h.values.real, dtype=float)
    return np.interp(grid.nodes, plant.grid.nodes, plant.h.values.real)


def _half_grid(values: RealArray) -> RealArray:
    out = np.empty(2 * values.size - 1)
    out[0::2] = values
    out[1::2] = 0.5 * (values[:-1] + values[1:])
    return out


def solve_goursat(
    h: RealArray,
    c: float,
    q: float,
    grid: SpatialGrid,
    tol: float = KERNEL_TOL,
    max_iter: int = KERNEL_MAX_ITER,
) -> tuple[KernelGrid, GoursatReport]:
    """Solve the control-type Goursat problem by successive approximation.

    In characteristic variables alpha = x + xi, beta = x - xi the kernel G(alpha, beta)
    satisfies G_ab = (1/4) a((alpha - beta)/2) G with a = i (h + c), which integrates to

        G(alpha, beta) = g0(beta) - (i/4)(H(alpha) - H(beta))
                         + int_beta^alpha int_0^beta (1/4) a G ds dtau,

    H(alpha) = int_0^alpha (h(tau/2) + c) dtau, and g0 the boundary trace fixed by the Robin
    condition at xi = 0. The (alpha, beta) lattice has the grid spacing, so nodes with odd
    alpha + beta sit on the half grid, where h is linearly interpolated.

    Args:
        h: Potential at the grid nodes
        c: Damping constant (c_s or c_o)
        q: Robin parameter
        grid: Spatial grid
        tol: Sup-norm update tolerance
        max_iter: Iteration cap

    Returns:
        Lower-triangular kernel and the iteration report

    Raises:
        KernelSolveError: If the update stays above tol after max_iter sweeps
    """
    n = grid.n_cells
    d = grid.spacing
    hh = _half_grid(np.asarray(h, dtype=float))

    a_idx = np.arange(2 * n + 1)[:, None]
    b_idx = np.arange(n + 1)[None, :]
    domain = (b_idx <= a_idx) & (a_idx + b_idx <= 2 * n)
    coeff = np.where(domain, 0.25j * (hh[np.clip(a_idx - b_idx, 0, 2 * n)] + c), 0)

    H = cumulative_trapezoid(hh + c, dx=d, initial=0)
    base = -0.25j * (H[:, None] - H[None, : n + 1])
    sigma = np.arange(n + 1) * d
    edge_source = -0.25j * (hh[: n + 1] + c)
    diag = np.arange(n + 1)

    G = np.zeros((2 * n + 1, n + 1), dtype=complex)
    update = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        inner = cumulative_trapezoid(coeff * G, dx=d, axis=1, initial=0)
        inner = np.where(domain, inner, 0)
        outer = cumulative_trapezoid(inner, dx=d, axis=0, initial=0)
        double = outer - outer[diag, diag][None, :]
        g_alpha = edge_source + inner[diag, diag]
        g0 = np.exp(1j * q * sigma) * (
            -1j * q
            + 2 * cumulative_trapezoid(np.exp(-1j * q * sigma) * g_alpha, dx=d, initial=0)
        )
        G_new = np.where(domain, g0[None, :] + base + double, 0)
        update = float(np.max(np.abs(G_new - G)))
        G = G_new
        if update < tol:
            break
    else:
        raise KernelSolveError(
            f"kernel iteration did not converge in {max_iter} sweeps (update {update:.3e})",
            update=update,
            iterations=max_iter,
        )

    rows, cols = np.tril_indices(n + 1)
    values = np.zeros((n + 1, n + 1), dtype=complex)
    values[rows, cols] = G[rows + cols, rows - cols]
    logger.debug(f"Goursat solve: {iterations} sweeps, final update {update:.2e}, n={n}")
    return KernelGrid(grid, "lower", values), GoursatReport(iterations, update)


def _check_inputs(c: float, grid: SpatialGrid, name: str) -> None:
    if c < 0:
        raise ConfigError(f"{name} must be nonnegative, got {c}")
    if grid.n_cells < MIN_KERNEL_CELLS:
        raise ConfigError(f"kernel grids need at least {MIN_KERNEL_CELLS} cells")


def solve_control_kernel(
    plant: PlantSpec,
    c_s: float,
    grid: SpatialGrid,
    tol: float = KERNEL_TOL,
    max_iter: int = KERNEL_MAX_ITER,
) -> KernelGrid:
    """Control kernel k on the lower triangle."""
    _check_inputs(c_s, grid, "c_s")
    kernel, report = solve_goursat(potential_on(plant, grid), c_s, plant.q, grid, tol, max_iter)
    logger.info(f"Control kernel solved in {report.iterations} sweeps (n={grid.n_cells})")
    return kernel


def solve_observer_kernel(
    plant: PlantSpec,
    c_o: float,
    grid: SpatialGrid,
    tol: float = KERNEL_TOL,
    max_iter: int = KERNEL_MAX_ITER,
) -> KernelGrid:
    """Observer kernel p on the upper triangle, p(x, xi) = k_{c_o}(xi, x)."""
    _check_inputs(c_o, grid, "c_o")
    kernel, report = solve_goursat(potential_on(plant, grid), c_o, plant.q, grid, tol, max_iter)
    logger.info(f"Observer kernel solved in {report.iterations} sweeps (n={grid.n_cells})")
    return kernel.transpose()


def solve_reciprocal_kernel(
    src: KernelGrid, tol: float = RECIPROCAL_TOL, max_iter: int = RECIPROCAL_MAX_ITER
) -> KernelGrid:
    """Reciprocal kernel R = src + int R(x, s) src(s, xi) ds over the triangle row.

    All rows are iterated together; the integral over s in [xi, x] (lower) or [x, xi]
    (upper) is the full matrix product minus half of each endpoint product.

    Raises:
        KernelSolveError: If the successive approximation does not converge
    """
    S = src.values
    d = src.grid.spacing
    mask = src.mask
    s_diag = np.diagonal(S)
    idx = np.arange(S.shape[0])
    R = S.copy()
    update = np.inf
    for iterations in range(1, max_iter + 1):
        T = d * (R @ S) - 0.5 * d * (R * s_diag[None, :] + np.diagonal(R)[:, None] * S)
        R_new = np.where(mask, S + T, 0)
        R_new[idx, idx] = s_diag
        update = float(np.max(np.abs(R_new - R)))
        R = R_new
        if update < tol:
            logger.debug(f"Reciprocal kernel: {iterations} sweeps, update {update:.2e}")
            return KernelGrid(src.grid, src.orientation, R)
    raise KernelSolveError(
        f"reciprocal kernel did not converge in {max_iter} sweeps (update {update:.3e})",
        update=update,
        iterations=max_iter,
    )


def build_kernels(
    plant: PlantSpec,
    c_s: float,
    c_o: float,
    grid: SpatialGrid,
    tol: float = KERNEL_TOL,
    max_iter: int = KERNEL_MAX_ITER,
    reciprocal_tol: float = RECIPROCAL_TOL,
) -> KernelSet:
    """Solve all four kernels for one plant."""
    k = solve_control_kernel(plant, c_s, grid, tol, max_iter)
    p = solve_observer_kernel(plant, c_o, grid, tol, max_iter)
    return KernelSet(
        k=k,
        K=solve_reciprocal_kernel(k, reciprocal_tol),
        p=p,
        P=solve_reciprocal_kernel(p, reciprocal_tol),
        c_s=c_s,
        c_o=c_o,
    )


def volterra_matrix(kernel: KernelGrid, sign: float) -> np.ndarray:
    """Matrix of f -> f + sign * int kernel f over each triangle row."""
    weights = triangle_weights(kernel.grid, kernel.orientation)
    return np.eye(kernel.grid.size) + sign * weights * kernel.values


def _apply(
    kernel: KernelGrid, f: ComplexProfile, sign: float, orientation: Orientation
) -> ComplexProfile:
    if kernel.orientation != orientation:
        raise DimensionError(f"expected a {orientation}-triangular kernel")
    if kernel.grid != f.grid:
        raise DimensionError("kernel and profile live on different grids")
    weights = triangle_weights(kernel.grid, orientation)
    return ComplexProfile(f.grid, f.values + sign * ((weights * kernel.values) @ f.values))


def apply_forward(kernel: KernelGrid, z: ComplexProfile) -> ComplexProfile:
    """v(x) = z(x) - int_0^x k(x, xi) z(xi) dxi."""
    return _apply(kernel, z, -1.0, "lower")


def apply_inverse(kernel: KernelGrid, v: ComplexProfile) -> ComplexProfile:
    """z(x) = v(x) + int_0^x K(x, xi) v(xi) dxi."""
    return _apply(kernel, v, 1.0, "lower")


def apply_observer_forward(kernel: KernelGrid, e: ComplexProfile) -> ComplexProfile:
    """z~(x) = e(x) - int_x^1 p(x, xi) e(xi) dxi."""
    return _apply(kernel, e, -1.0, "upper")


def apply_observer_inverse(kernel: KernelGrid, z: ComplexProfile) -> ComplexProfile:
    """e(x) = z~(x) + int_x^1 P(x, xi) z~(xi) dxi."""
    return _apply(kernel, z, 1.0, "upper")


def kernel_feedback_trace(k: KernelGrid) -> tuple[complex, ComplexProfile]:
    """k(1, 1) and k_x(1, xi) from second-order one-sided differences.

    Columns xi <= 1 - 2 dx use the backward stencil in x. The last two columns have no
    room for it inside the triangle, so there k_x is the derivative along the diagonal
    direction minus k_xi taken along the row x = 1.

    Raises:
        ConfigError: If the grid has fewer than 8 cells
    """
    if k.orientation != "lower":
        raise DimensionError("feedback trace needs a lower-triangular kernel")
    n = k.grid.n_cells
    if n < MIN_KERNEL_CELLS:
        raise ConfigError(f"feedback trace needs at least {MIN_KERNEL_CELLS} cells")
    V = k.values
    d = k.grid.spacing
    kx = np.empty(n + 1, dtype=complex)
    kx[: n - 1] = (3 * V[n, : n - 1] - 4 * V[n - 1, : n - 1] + V[n - 2, : n - 1]) / (2 * d)
    k_xi = np.gradient(V[n, :], d, edge_order=2)
    for j in (n - 1, n):
        along_diag = (3 * V[n, j] - 4 * V[n - 1, j - 1] + V[n - 2, j - 2]) / (2 * d)
        kx[j] = along_diag - k_xi[j]
    return complex(V[n, n]), ComplexProfile(k.grid, kx)


def observer_feedback_trace(p: KernelGrid) -> tuple[complex, ComplexProfile]:
    """p(1, 1) and p_xi(x, 1) for an upper-triangular observer kernel."""
    if p.orientation != "upper":
        raise DimensionError("observer trace needs an upper-triangular kernel")
    return kernel_feedback_trace(p.transpose())


def kernel_residual(
    kernel: KernelGrid, plant: PlantSpec, c: float, side: Literal["control", "observer"]
) -> float:
    """Max PDE residual over interior triangle nodes with centered second differences."""
    if side == "observer":
        lower = kernel.transpose()
    elif side == "control":
        lower = kernel
    else:
        raise ConfigError(f"unknown kernel side {side!r}")
    if lower.orientation != "lower":
        raise DimensionError(f"{side} kernel has the wrong orientation")
    n = lower.grid.n_cells
    if n < 3:
        return 0.0
    V = lower.values
    d2 = lower.grid.spacing**2
    h = potential_on(plant, lower.grid)
    # interior: 1 <= j <= i - 1, i <= n - 1
    rows, cols = np.tril_indices(n, k=-1)
    keep = cols >= 1
    rows, cols = rows[keep], cols[keep]
    if rows.size == 0:
        return 0.0
    k_xx = (V[rows + 1, cols] - 2 * V[rows, cols] + V[rows - 1, cols]) / d2
    k_xixi = (V[rows, cols + 1] - 2 * V[rows, cols] + V[rows, cols - 1]) / d2
    residual = k_xx - k_xixi - 1j * (h[cols] + c) * V[rows, cols]
    return float(np.max(np.abs(residual)))


def boundary_residual(k: KernelGrid, q: float) -> float:
    """Max of |k_xi(x, 0) + q i k(x, 0)| with a forward second-order stencil in xi."""
    if k.orientation != "lower":
        raise DimensionError("boundary residual needs a lower-triangular kernel")
    V = k.values
    d = k.grid.spacing
    rows = np.arange(2, k.grid.size)
    k_xi = (-3 * V[rows, 0] + 4 * V[rows, 1] - V[rows, 2]) / (2 * d)
    return float(np.max(np.abs(k_xi + 1j * q * V[rows, 0]), initial=0.0))

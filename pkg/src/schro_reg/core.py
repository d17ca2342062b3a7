"""
Shared numeric substrate for schro-reg.

Uniform grids on [0, 1], complex profiles sampled on them, kernel grids on the two
triangles, composite-trapezoid quadrature, and the plant, exosystem and observation data
every other module consumes. All types are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid
from scipy.linalg import block_diag

from schro_reg.config import IMAG_RESIDUE_TOL
from schro_reg.errors import ConfigError, DimensionError, ExosystemError

ComplexArray = NDArray[np.complex128]
RealArray = NDArray[np.float64]
Orientation = Literal["lower", "upper"]


def _frozen(values: ArrayLike, dtype: type = complex) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid x_i = i / n_cells on [0, 1]."""

    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ConfigError(f"n_cells must be a positive integer, got {self.n_cells}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_cells

    @property
    def size(self) -> int:
        return self.n_cells + 1

    @cached_property
    def nodes(self) -> RealArray:
        return _frozen(np.arange(self.size) / self.n_cells, dtype=float)

    @cached_property
    def weights(self) -> RealArray:
        """Composite-trapezoid weights, spacing with halves at both ends."""
        w = np.full(self.size, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return _frozen(w, dtype=float)

    def profile(self, values: ArrayLike) -> ComplexProfile:
        return ComplexProfile(self, np.asarray(values, dtype=complex))

    def sample(self, func: Callable[[RealArray], ArrayLike]) -> ComplexProfile:
        values = np.broadcast_to(np.asarray(func(self.nodes), dtype=complex), (self.size,))
        return ComplexProfile(self, values)

    def zeros(self) -> ComplexProfile:
        return ComplexProfile(self, np.zeros(self.size, dtype=complex))

    def constant(self, value: complex) -> ComplexProfile:
        return ComplexProfile(self, np.full(self.size, value, dtype=complex))


@dataclass(frozen=True, eq=False)
class ComplexProfile:
    """Complex function sampled at every node of a grid."""

    grid: SpatialGrid
    values: ComplexArray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.grid.size,):
            raise DimensionError(
                f"profile has shape {values.shape}, grid needs ({self.grid.size},)"
            )
        object.__setattr__(self, "values", values)

    def _check(self, other: ComplexProfile) -> None:
        if other.grid != self.grid:
            raise DimensionError(
                f"grid mismatch: {self.grid.n_cells} cells vs {other.grid.n_cells} cells"
            )

    def __add__(self, other: ComplexProfile) -> ComplexProfile:
        self._check(other)
        return ComplexProfile(self.grid, self.values + other.values)

    def __sub__(self, other: ComplexProfile) -> ComplexProfile:
        self._check(other)
        return ComplexProfile(self.grid, self.values - other.values)

    def __mul__(self, other: complex | ComplexProfile) -> ComplexProfile:
        if isinstance(other, ComplexProfile):
            self._check(other)
            return ComplexProfile(self.grid, self.values * other.values)
        return ComplexProfile(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self) -> ComplexProfile:
        return ComplexProfile(self.grid, -self.values)

    def conj(self) -> ComplexProfile:
        return ComplexProfile(self.grid, np.conj(self.values))

    def at(self, x: float) -> complex:
        """Value at x by linear interpolation between adjacent nodes."""
        nodes = self.grid.nodes
        re = np.interp(x, nodes, self.values.real)
        im = np.interp(x, nodes, self.values.imag)
        return complex(re, im)

    def integral(self) -> complex:
        return complex(trapezoid(self.values, dx=self.grid.spacing))

    def norm(self) -> float:
        return profile_norm(self.values, self.grid)

    def sup_distance(self, other: ComplexProfile) -> float:
        self._check(other)
        return float(np.max(np.abs(self.values - other.values)))

    def resample(self, grid: SpatialGrid) -> ComplexProfile:
        """Linear interpolation onto another grid."""
        if grid == self.grid:
            return self
        nodes = self.grid.nodes
        re = np.interp(grid.nodes, nodes, self.values.real)
        im = np.interp(grid.nodes, nodes, self.values.imag)
        return ComplexProfile(grid, re + 1j * im)


@dataclass(frozen=True, eq=False)
class KernelGrid:
    """Complex kernel on the lower (xi <= x) or upper (xi >= x) triangle of a grid.

    values[i, j] holds the kernel at (x_i, xi_j); entries off the declared triangle are zero.
    """

    grid: SpatialGrid
    orientation: Orientation
    values: ComplexArray

    def __post_init__(self):
        if self.orientation not in ("lower", "upper"):
            raise ConfigError(f"unknown kernel orientation {self.orientation!r}")
        values = np.array(self.values, dtype=complex)
        n = self.grid.size
        if values.shape != (n, n):
            raise DimensionError(f"kernel has shape {values.shape}, grid needs ({n}, {n})")
        if np.any(values[~triangle_mask(n, self.orientation)] != 0):
            raise DimensionError(f"{self.orientation} kernel populated outside its triangle")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: SpatialGrid, orientation: Orientation) -> KernelGrid:
        return cls(grid, orientation, np.zeros((grid.size, grid.size), dtype=complex))

    @classmethod
    def from_function(
        cls,
        grid: SpatialGrid,
        orientation: Orientation,
        func: Callable[[RealArray, RealArray], ArrayLike],
    ) -> KernelGrid:
        """Sample func(x, xi) on the declared triangle."""
        x, xi = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
        values = np.asarray(func(x, xi), dtype=complex) * np.ones_like(x)
        values = np.where(triangle_mask(grid.size, orientation), values, 0)
        return cls(grid, orientation, values)

    @property
    def mask(self) -> NDArray[np.bool_]:
        return triangle_mask(self.grid.size, self.orientation)

    @property
    def diagonal(self) -> ComplexArray:
        return np.diagonal(self.values)

    def transpose(self) -> KernelGrid:
        other: Orientation = "upper" if self.orientation == "lower" else "lower"
        return KernelGrid(self.grid, other, self.values.T)

    def sup_distance(self, other: KernelGrid) -> float:
        if other.grid != self.grid or other.orientation != self.orientation:
            raise DimensionError("kernel grids differ in grid or orientation")
        return float(np.max(np.abs(self.values - other.values)))


def triangle_mask(size: int, orientation: Orientation) -> NDArray[np.bool_]:
    lower = np.tri(size, dtype=bool)
    return lower if orientation == "lower" else lower.T


def triangle_weights(grid: SpatialGrid, orientation: Orientation) -> RealArray:
    """Trapezoid weights for integrating over each row of a triangle.

    Lower rows integrate over [0, x_i], upper rows over [x_i, 1]. Row i carries halves at
    both interval ends, and the degenerate row (x = 0 lower, x = 1 upper) is zero.
    """
    n = grid.size
    mask = triangle_mask(n, orientation)
    w = np.where(mask, grid.spacing, 0.0)
    idx = np.arange(n)
    if orientation == "lower":
        w[idx, 0] *= 0.5
    else:
        w[idx, n - 1] *= 0.5
    w[idx, idx] *= 0.5
    if orientation == "lower":
        w[0, :] = 0.0
    else:
        w[n - 1, :] = 0.0
    return w


def profile_norm(values: ArrayLike, grid: SpatialGrid) -> float:
    """Trapezoid L2 norm of nodal values."""
    v = np.asarray(values)
    return float(np.sqrt(np.sum(grid.weights * (v.real**2 + v.imag**2))))


def l2_inner(a: ComplexProfile, b: ComplexProfile) -> complex:
    """Trapezoid approximation of the integral of a(x) conj(b(x)) over [0, 1].

    Raises:
        DimensionError: If the profiles live on different grids
    """
    a._check(b)
    return complex(trapezoid(a.values * np.conj(b.values), dx=a.grid.spacing))


@dataclass(frozen=True, eq=False)
class ObservationFunctional:
    """C_e[z] = theta z(x0) + integral of c(x) z(x) over [0, 1]."""

    theta: complex
    x0: float
    c: ComplexProfile

    def __post_init__(self):
        if not 0.0 <= self.x0 <= 1.0:
            raise ConfigError(f"observation point x0={self.x0} outside [0, 1]")
        object.__setattr__(self, "theta", complex(self.theta))

    @classmethod
    def point(cls, grid: SpatialGrid, x0: float, theta: complex = 1.0) -> ObservationFunctional:
        return cls(theta, x0, grid.zeros())

    @property
    def grid(self) -> SpatialGrid:
        return self.c.grid

    @property
    def is_zero(self) -> bool:
        return self.theta == 0 and not np.any(self.c.values)


def evaluate_Ce(C: ObservationFunctional, z: ComplexProfile) -> complex:
    """Apply the observation functional to a profile."""
    C.c._check(z)
    return C.theta * z.at(C.x0) + complex(trapezoid(C.c.values * z.values, dx=z.grid.spacing))


@dataclass(frozen=True, eq=False)
class PlantSpec:
    """Plant data: Robin parameter q, real potential h and disturbance shape g."""

    q: float
    h: ComplexProfile
    g: ComplexProfile

    def __post_init__(self):
        if self.q < 0:
            raise ConfigError(f"boundary parameter q must be nonnegative, got {self.q}")
        if self.q == 0:
            logger.warning("Plant with q = 0: Robin end degenerates to Neumann (oracle setting)")
        self.h._check(self.g)
        if np.max(np.abs(self.h.values.imag), initial=0.0) > 1e-12:
            raise ConfigError("potential h must be real-valued")

    @property
    def grid(self) -> SpatialGrid:
        return self.h.grid

    @classmethod
    def uniform(cls, grid: SpatialGrid, q: float, h: float = 0.0, g: float = 0.0) -> PlantSpec:
        return cls(q, grid.constant(h), grid.constant(g))

    def on(self, grid: SpatialGrid) -> PlantSpec:
        """Same plant with h and g interpolated onto grid."""
        if grid == self.grid:
            return self
        return PlantSpec(self.q, self.h.resample(grid), self.g.resample(grid))


@dataclass(frozen=True)
class ModalData:
    """Eigendecomposition of a diagonalizable block: S V = V diag(eigenvalues)."""

    eigenvalues: ComplexArray
    vectors: ComplexArray
    inverse: ComplexArray


def _modal(block: RealArray, name: str) -> ModalData:
    n = block.shape[0]
    if n == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return ModalData(np.zeros(0, dtype=complex), empty, empty)
    eigenvalues, vectors = np.linalg.eig(block)
    if np.linalg.matrix_rank(vectors) < n or np.linalg.cond(vectors) > 1e10:
        raise ExosystemError(f"{name} is not diagonalizable")
    scale = max(1.0, float(np.max(np.abs(block), initial=0.0)))
    if np.any(np.abs(eigenvalues.real) > IMAG_RESIDUE_TOL * scale):
        raise ExosystemError(f"{name} has eigenvalues off the imaginary axis: {eigenvalues}")
    eigenvalues = 1j * eigenvalues.imag
    return ModalData(
        _frozen(eigenvalues), _frozen(vectors.astype(complex)), _frozen(np.linalg.inv(vectors))
    )


@dataclass(frozen=True, eq=False)
class ExosystemSpec:
    """Block-diagonal exosystem w' = S w with S = diag(S_d, S_r).

    d_1 = q_d1^T w_d, d_2 = q_d2^T w_d and r = q_r^T w_r. The padded vectors p_1, p_2, p_r
    act on the full state w = [w_d; w_r].
    """

    S_d: RealArray
    S_r: RealArray
    q_d1: RealArray
    q_d2: RealArray
    q_r: RealArray
    w0: RealArray

    def __post_init__(self):
        fields = {}
        for name in ("S_d", "S_r"):
            block = np.array(getattr(self, name), dtype=float)
            if block.size == 0:
                block = block.reshape(0, 0)
            if block.ndim != 2 or block.shape[0] != block.shape[1]:
                raise DimensionError(f"{name} must be square, got shape {block.shape}")
            fields[name] = block
        n_d, n_r = fields["S_d"].shape[0], fields["S_r"].shape[0]
        for name, size in (("q_d1", n_d), ("q_d2", n_d), ("q_r", n_r), ("w0", n_d + n_r)):
            vec = np.array(getattr(self, name), dtype=float).reshape(-1)
            if vec.shape != (size,):
                raise DimensionError(f"{name} must have length {size}, got {vec.shape[0]}")
            fields[name] = vec
        for name, value in fields.items():
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        self._validate()

    def _validate(self) -> None:
        _ = self.r_modal
        lam = self.d_modal.eigenvalues
        for i in range(lam.size):
            for j in range(i + 1, lam.size):
                if abs(lam[i] - lam[j]) <= 1e-9 * max(1.0, abs(lam[i])):
                    raise ExosystemError(f"S_d has a repeated eigenvalue {lam[i]:.6g}")
        if self.n_r > 0:
            rows = [self.q_r]
            for _ in range(self.n_r - 1):
                rows.append(rows[-1] @ self.S_r)
            if np.linalg.matrix_rank(np.vstack(rows)) < self.n_r:
                raise ExosystemError("(q_r^T, S_r) is not observable")

    @property
    def n_d(self) -> int:
        return self.S_d.shape[0]

    @property
    def n_r(self) -> int:
        return self.S_r.shape[0]

    @property
    def n_w(self) -> int:
        return self.n_d + self.n_r

    @cached_property
    def S(self) -> RealArray:
        return _frozen(block_diag(self.S_d, self.S_r).reshape(self.n_w, self.n_w), dtype=float)

    @cached_property
    def p1(self) -> RealArray:
        return _frozen(np.concatenate([self.q_d1, np.zeros(self.n_r)]), dtype=float)

    @cached_property
    def p2(self) -> RealArray:
        return _frozen(np.concatenate([self.q_d2, np.zeros(self.n_r)]), dtype=float)

    @cached_property
    def pr(self) -> RealArray:
        return _frozen(np.concatenate([np.zeros(self.n_d), self.q_r]), dtype=float)

    @cached_property
    def d_modal(self) -> ModalData:
        return _modal(self.S_d, "S_d")

    @cached_property
    def r_modal(self) -> ModalData:
        return _modal(self.S_r, "S_r")

    @cached_property
    def modal(self) -> ModalData:
        d, r = self.d_modal, self.r_modal
        n = self.n_w
        vectors = block_diag(d.vectors, r.vectors).reshape(n, n).astype(complex)
        inverse = block_diag(d.inverse, r.inverse).reshape(n, n).astype(complex)
        return ModalData(
            _frozen(np.concatenate([d.eigenvalues, r.eigenvalues])),
            _frozen(vectors),
            _frozen(inverse),
        )

    def state(self, t: float, w0: ArrayLike | None = None) -> RealArray:
        return exosystem_state(self, t, w0)

    def signals(self, w: ArrayLike) -> tuple[float, float, float]:
        """(d_1, d_2, r) for a full exosystem state."""
        w = np.asarray(w)
        return float(self.p1 @ w), float(self.p2 @ w), float(self.pr @ w)


def exosystem_state(E: ExosystemSpec, t: float, w0: ArrayLike | None = None) -> RealArray:
    """Exact w(t) = exp(S t) w0 through the eigendecomposition of S.

    Raises:
        ConfigError: If t < 0
        ExosystemError: If the reconstruction leaves an imaginary residue
    """
    if t < 0:
        raise ConfigError(f"exosystem time must be nonnegative, got {t}")
    start = E.w0 if w0 is None else np.asarray(w0, dtype=float)
    if E.n_w == 0:
        return np.zeros(0)
    m = E.modal
    w = m.vectors @ (np.exp(m.eigenvalues * t) * (m.inverse @ start))
    scale = max(1.0, float(np.linalg.norm(start)))
    if np.max(np.abs(w.imag)) > IMAG_RESIDUE_TOL * scale:
        raise ExosystemError(f"exosystem state has imaginary residue {np.max(np.abs(w.imag)):.3e}")
    return w.real

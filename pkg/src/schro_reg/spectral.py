"""
Spectrum of the open-loop generator and frequency-domain checks.

The generator A f = -i f'' with f'(0) = -i q f(0), f'(1) = 0 has eigenvalues mu = -i lambda^2
where lambda solves e^{2 lambda}(lambda - i q) = lambda + i q. Roots come in pairs
(lambda, -lambda); one representative per pair is returned, seeded at n pi i + q/(n pi).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike

from schro_reg.config import (
    MODAL_COUNT,
    NEWTON_MAX_ITER,
    NEWTON_TOL,
    ROOT_COLLISION_DISTANCE,
)
from schro_reg.core import (
    ComplexArray,
    ComplexProfile,
    ObservationFunctional,
    PlantSpec,
    SpatialGrid,
)
from schro_reg.errors import ConfigError, HypothesisError, SpectralError

DEFAULT_EIGEN_GRID = SpatialGrid(200)


@dataclass(frozen=True, eq=False)
class EigenPair:
    """One eigenpair of A.

    Attributes:
        index: Mode number n (0 for the ground mode)
        root: Auxiliary root lambda
        mu: Eigenvalue -i lambda^2
        phi: Eigenfunction a e^{lambda x} + e^{-lambda x}, a = (lambda - iq)/(lambda + iq)
        residual: |e^{2 lambda}(lambda - iq) - (lambda + iq)| at the returned root
        gram: Bilinear integral of phi^2 over [0, 1]
    """

    index: int
    root: complex
    mu: complex
    phi: ComplexProfile
    residual: float
    gram: complex
    q: float

    @property
    def a(self) -> complex:
        return (self.root - 1j * self.q) / (self.root + 1j * self.q)

    def value(self, x: ArrayLike) -> ComplexArray:
        """Exact eigenfunction values at arbitrary points."""
        x = np.asarray(x, dtype=float)
        return self.a * np.exp(self.root * x) + np.exp(-self.root * x)

    @property
    def scaled_residual(self) -> float:
        """Residual divided by 1 + |lambda|, the floating-point floor of the equation."""
        return self.residual / (1.0 + abs(self.root))


def characteristic(lam: complex, q: float) -> complex:
    e2 = np.exp(2 * lam)
    return complex(e2 * (lam - 1j * q) - (lam + 1j * q))


def _characteristic_slope(lam: complex, q: float) -> complex:
    e2 = np.exp(2 * lam)
    return complex(e2 * (2 * (lam - 1j * q) + 1) - 1)


def newton_root(seed: complex, q: float, tol: float = NEWTON_TOL) -> complex:
    """Newton iteration on the characteristic function from seed.

    Raises:
        SpectralError: If the iteration stalls, hits a flat point or wanders off the seed
    """
    lam = complex(seed)
    for iteration in range(NEWTON_MAX_ITER):
        slope = _characteristic_slope(lam, q)
        if slope == 0:
            raise SpectralError(f"flat characteristic function at lambda={lam:.6g}")
        step = characteristic(lam, q) / slope
        lam -= step
        if abs(step) < 1e-15 * (1 + abs(lam)):
            break
    else:
        raise SpectralError(f"Newton did not converge from seed {seed:.6g}")
    if abs(characteristic(lam, q)) > tol * (1 + abs(lam)):
        raise SpectralError(
            f"Newton stalled at lambda={lam:.6g} with residual {abs(characteristic(lam, q)):.3e}"
        )
    if abs(lam - seed) > 0.5 * np.pi:
        raise SpectralError(f"Newton wandered from seed {seed:.6g} to {lam:.6g}")
    return lam


def gram_integral(lam: complex, q: float) -> complex:
    """int_0^1 phi(x)^2 dx in closed form (bilinear, no conjugation)."""
    a = (lam - 1j * q) / (lam + 1j * q)
    return complex(
        a**2 * (np.exp(2 * lam) - 1) / (2 * lam) + 2 * a + (1 - np.exp(-2 * lam)) / (2 * lam)
    )


def eigenvalues_A(
    q: float,
    count: int,
    grid: SpatialGrid = DEFAULT_EIGEN_GRID,
    include_ground: bool = False,
    tol: float = NEWTON_TOL,
) -> list[EigenPair]:
    """Eigenpairs n = 1..count (and n = 0 when include_ground) by seeded Newton.

    Raises:
        ConfigError: If count < 1 or q <= 0
        SpectralError: On Newton failure or when two seeds reach the same root
    """
    if count < 1:
        raise ConfigError(f"count must be at least 1, got {count}")
    if q <= 0:
        raise ConfigError(f"q must be positive for the spectral computation, got {q}")
    seeds = [(n, n * np.pi * 1j + q / (n * np.pi)) for n in range(1, count + 1)]
    if include_ground:
        seeds.insert(0, (0, complex(np.sqrt(1j * q))))

    pairs = []
    for n, seed in seeds:
        lam = newton_root(seed, q, tol)
        phi_values = ((lam - 1j * q) / (lam + 1j * q)) * np.exp(lam * grid.nodes) + np.exp(
            -lam * grid.nodes
        )
        pairs.append(
            EigenPair(
                index=n,
                root=lam,
                mu=-1j * lam**2,
                phi=ComplexProfile(grid, phi_values),
                residual=abs(characteristic(lam, q)),
                gram=gram_integral(lam, q),
                q=q,
            )
        )

    roots = np.array([p.root for p in pairs])
    distance = np.abs(roots[:, None] - roots[None, :]) + np.eye(roots.size) * np.inf
    if roots.size > 1 and float(np.min(distance)) < ROOT_COLLISION_DISTANCE:
        raise SpectralError("two Newton seeds converged to the same root")
    logger.info(f"Computed {len(pairs)} eigenpairs of A for q={q}")
    return pairs


@dataclass(frozen=True)
class AsymptoticsRow:
    n: int
    deviation: float
    re_mu_gap: float


@dataclass(frozen=True)
class AsymptoticsReport:
    rows: list[AsymptoticsRow]
    max_deviation: float
    growth_ratio: float
    strip_width: float
    max_re_gap_tail: float
    min_re_mu: float

    @property
    def all_anti_stable(self) -> bool:
        return self.min_re_mu > 0


def asymptotics_report(pairs: Sequence[EigenPair], q: float) -> AsymptoticsReport:
    """Deviations n^2 |mu_n - 2q - i (n pi)^2| and the vertical strip width.

    growth_ratio compares the largest deviation for n >= 20 with the largest for
    5 <= n < 20 (nan when either range is empty).

    Raises:
        ConfigError: If fewer than 5 nontrivial pairs are supplied
    """
    modes = [p for p in pairs if p.index >= 1]
    if len(modes) < 5:
        raise ConfigError("asymptotics need at least 5 eigenpairs")
    rows = [
        AsymptoticsRow(
            n=p.index,
            deviation=p.index**2 * abs(p.mu - 2 * q - 1j * (p.index * np.pi) ** 2),
            re_mu_gap=abs(p.mu.real - 2 * q),
        )
        for p in modes
    ]
    tail = [r.deviation for r in rows if r.n >= 5]
    early = [r.deviation for r in rows if 5 <= r.n < 20]
    late = [r.deviation for r in rows if r.n >= 20]
    growth = max(late) / max(early) if early and late else float("nan")
    re_parts = np.abs([p.mu.real for p in modes])
    gaps = [r.re_mu_gap for r in rows if r.n >= 10]
    return AsymptoticsReport(
        rows=rows,
        max_deviation=max(tail) if tail else 0.0,
        growth_ratio=growth,
        strip_width=float(np.max(re_parts) - np.min(re_parts)),
        max_re_gap_tail=max(gaps) if gaps else 0.0,
        min_re_mu=float(min(p.mu.real for p in modes)),
    )


def eigenfunction_deviation(pair: EigenPair) -> float:
    """L2 distance between phi_n/phi_n(0) and cos(n pi x) on the pair's grid."""
    phi = pair.phi
    normalized = phi.values / phi.values[0]
    diff = normalized - np.cos(pair.index * np.pi * phi.grid.nodes)
    return ComplexProfile(phi.grid, diff).norm()


@dataclass(frozen=True)
class ObserverSpectrum:
    """Observer error spectrum and the quadratic-closeness sum.

    Attributes:
        finite: Eigenvalues of A_r and A_d
        infinite: j^2 pi^2 i - c_o for j = 0..j_max
        mirrored: -j^2 pi^2 i - c_o, the sign variant of the same family
        abscissa: Largest real part over finite and infinite parts
        closeness_sum: Sum over j of |(A_d - lambda_j)^{-1} l_d|^2
        partial_sums: Running sums for j = 0..j_max
        tail_estimate: |l_d|^2/(3 pi^4 j_max^3)
    """

    finite: ComplexArray
    infinite: ComplexArray
    mirrored: ComplexArray
    abscissa: float
    closeness_sum: float
    partial_sums: list[float] = field(default_factory=list)
    tail_estimate: float = 0.0


def _square(matrix: ArrayLike) -> np.ndarray:
    M = np.asarray(matrix, dtype=complex)
    return M.reshape(0, 0) if M.size == 0 else M


def observer_error_spectrum(
    c_o: float, A_r: ArrayLike, A_d: ArrayLike, l_d: ArrayLike, j_max: int
) -> ObserverSpectrum:
    """Spectrum of the observer error dynamics.

    Raises:
        HypothesisError: If A_d - lambda_j is singular for some j
    """
    A_r = _square(A_r)
    A_d = _square(A_d)
    l_d = np.asarray(l_d, dtype=complex).reshape(-1)
    j = np.arange(j_max + 1)
    infinite = 1j * (j * np.pi) ** 2 - c_o
    eig_r = np.linalg.eigvals(A_r) if A_r.size else np.zeros(0, dtype=complex)
    eig_d = np.linalg.eigvals(A_d) if A_d.size else np.zeros(0, dtype=complex)
    finite = np.concatenate([eig_r, eig_d])

    partial = []
    total = 0.0
    identity = np.eye(A_d.shape[0])
    for lam in infinite:
        if A_d.size:
            shifted = A_d - lam * identity
            if np.linalg.cond(shifted) > 1e12:
                raise HypothesisError(
                    [f"observer eigenvalue {lam:.6g} collides with the spectrum of A_d"]
                )
            total += float(np.linalg.norm(np.linalg.solve(shifted, l_d)) ** 2)
        partial.append(total)

    abscissa = float(max([-c_o, *finite.real])) if finite.size else -c_o
    tail = float(np.linalg.norm(l_d) ** 2 / (3 * np.pi**4 * max(j_max, 1) ** 3))
    return ObserverSpectrum(
        finite=finite,
        infinite=infinite,
        mirrored=-1j * (j * np.pi) ** 2 - c_o,
        abscissa=abscissa,
        closeness_sum=total,
        partial_sums=partial,
        tail_estimate=tail,
    )


@dataclass(frozen=True)
class ProbeReport:
    s_values: list[float]
    magnitudes: list[float]
    bounds: list[float]
    modal_sup: float
    tail_estimate: float
    truncation_warning: bool

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.magnitudes, self.magnitudes[1:]))

    @property
    def within_bound(self) -> bool:
        return all(m <= b for m, b in zip(self.magnitudes, self.bounds))


def _observe_mode(C: ObservationFunctional, pair: EigenPair) -> complex:
    value = C.theta * complex(pair.value(C.x0)) if C.theta != 0 else 0j
    if np.any(C.c.values):
        cells = max(C.grid.n_cells, 8 * max(pair.index, 1))
        fine = SpatialGrid(cells)
        weight = C.c.resample(fine).values
        value += complex(np.sum(fine.weights * weight * pair.value(fine.nodes)))
    return value


def resolvent_bound(s: float, modal_sup: float, shift: float) -> float:
    """(2 sqrt 2 m / pi^2) sum_{k>=0} 1/(theta + k^2) with theta = (s - shift)/pi^2."""
    theta = (s - shift) / np.pi**2
    if theta <= 0:
        return float("inf")
    root = np.pi * np.sqrt(theta)
    series = (1 + root / np.tanh(root)) / (2 * theta)
    return float(2 * np.sqrt(2) * modal_sup / np.pi**2 * series)


def strict_properness_probe(
    plant: PlantSpec,
    C: ObservationFunctional,
    B_choice: Literal["left", "right"],
    s_values: Sequence[float],
    count: int = MODAL_COUNT,
) -> ProbeReport:
    """|C (sI - A)^{-1} B| along the real axis by modal truncation.

    The left input enters through d_2 at x = 0, the right input through u at x = 1. The
    expansion includes the ground mode and uses the closed-form Gram integrals.

    Raises:
        ConfigError: If s_values are not positive and increasing or B_choice is unknown
    """
    s = np.asarray(s_values, dtype=float)
    if s.size == 0 or np.any(s <= 0) or np.any(np.diff(s) <= 0):
        raise ConfigError("probe s values must be positive and increasing")
    if B_choice not in ("left", "right"):
        raise ConfigError(f"unknown input side {B_choice!r}")
    if np.any(plant.h.values):
        logger.debug("Probe uses the spectrum of A; the potential h is not included")

    pairs = eigenvalues_A(plant.q, count, grid=DEFAULT_EIGEN_GRID, include_ground=True)
    weights = []
    mus = []
    for pair in pairs:
        if B_choice == "left":
            b = 1j * complex(pair.value(0.0)) / pair.gram
        else:
            b = -1j * complex(pair.value(1.0)) / pair.gram
        weights.append(b * _observe_mode(C, pair))
        mus.append(pair.mu)
    weights = np.asarray(weights)
    mus = np.asarray(mus)

    magnitudes = [float(abs(np.sum(weights / (sv - mus)))) for sv in s]
    modal_sup = float(np.max(np.abs(weights)))
    shift = float(np.max(mus.real))
    bounds = [resolvent_bound(sv, modal_sup, shift) for sv in s]
    tail = modal_sup / (np.pi**2 * count)
    smallest = min(magnitudes)
    warn = smallest > 0 and tail > 0.01 * smallest
    if warn:
        logger.warning(
            f"Modal truncation tail {tail:.2e} exceeds 1% of the smallest magnitude {smallest:.2e}"
        )
    return ProbeReport(
        s_values=[float(v) for v in s],
        magnitudes=magnitudes,
        bounds=bounds,
        modal_sup=modal_sup,
        tail_estimate=float(tail),
        truncation_warning=warn,
    )

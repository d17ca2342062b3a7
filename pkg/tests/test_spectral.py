"""
Tests for the open-loop spectrum, the observer error spectrum and the properness probe.
"""

import numpy as np
import pytest
from scipy.integrate import trapezoid

from schro_reg.core import ObservationFunctional, PlantSpec, SpatialGrid
from schro_reg.errors import ConfigError, HypothesisError
from schro_reg.spectral import (
    asymptotics_report,
    characteristic,
    eigenfunction_deviation,
    eigenvalues_A,
    gram_integral,
    observer_error_spectrum,
    resolvent_bound,
    strict_properness_probe,
)


class TestEigenvalues:
    """Test the seeded Newton spectrum of A."""

    @pytest.fixture(scope="class")
    def pairs(self):
        return eigenvalues_A(1.0, 30)

    def test_roots_are_accurate(self, pairs):
        for pair in pairs:
            assert pair.scaled_residual < 1e-12
            assert abs(characteristic(pair.root, 1.0)) == pytest.approx(pair.residual)

    def test_anti_stable(self, pairs):
        assert all(p.mu.real > 0 for p in pairs)

    def test_asymptotics(self, pairs):
        for p in pairs:
            if p.index >= 5:
                assert abs(p.mu - 2.0 - 1j * (p.index * np.pi) ** 2) < 1.0
        report = asymptotics_report(pairs, 1.0)
        assert report.all_anti_stable
        assert report.growth_ratio <= 1.5

    def test_gram_integral(self, pairs):
        pair = pairs[0]
        x = np.linspace(0, 1, 4001)
        numeric = trapezoid(pair.value(x) ** 2, x)
        assert gram_integral(pair.root, 1.0) == pytest.approx(numeric, rel=1e-5)

    def test_eigenfunction_shape(self, pairs):
        assert eigenfunction_deviation(pairs[19]) < 0.2

    def test_eigenfunction_deviation_decays_like_one_over_n(self):
        pairs = [p for p in eigenvalues_A(1.0, 50, grid=SpatialGrid(2000)) if p.index >= 5]
        scaled = np.array([p.index * eigenfunction_deviation(p) for p in pairs])
        assert len(scaled) == 46
        assert np.all(scaled < 0.5)
        # n = 5..19 against n = 20..50
        assert scaled[15:].max() <= 1.5 * scaled[:15].max()

    def test_ground_mode(self):
        pairs = eigenvalues_A(1.0, 3, include_ground=True)
        assert pairs[0].index == 0
        assert pairs[0].scaled_residual < 1e-12

    def test_invalid_arguments(self):
        with pytest.raises(ConfigError):
            eigenvalues_A(1.0, 0)
        with pytest.raises(ConfigError):
            eigenvalues_A(0.0, 5)

    def test_asymptotics_need_five_pairs(self):
        with pytest.raises(ConfigError):
            asymptotics_report(eigenvalues_A(1.0, 3), 1.0)


class TestObserverSpectrum:
    """Test the observer error spectrum."""

    def test_abscissa_and_partial_sums(self):
        spectrum = observer_error_spectrum(
            2.0, [[-3.0]], np.diag([-1.0, -2.5]), [1.0, 1.0], j_max=10
        )
        assert spectrum.abscissa == pytest.approx(-1.0)
        assert spectrum.infinite[0] == pytest.approx(-2.0)
        assert len(spectrum.partial_sums) == 11
        assert np.all(np.diff(spectrum.partial_sums) >= 0)
        assert spectrum.closeness_sum == pytest.approx(spectrum.partial_sums[-1])

    def test_collision(self):
        with pytest.raises(HypothesisError):
            observer_error_spectrum(2.0, [[-3.0]], [[-2.0]], [1.0], j_max=5)


class TestProbe:
    """Test the strict-properness probe."""

    def test_resolvent_bound(self):
        assert resolvent_bound(1.0, 1.0, 2.0) == float("inf")
        assert resolvent_bound(100.0, 1.0, 2.0) > resolvent_bound(200.0, 1.0, 2.0)

    def test_point_observation_at_left_end(self):
        grid = SpatialGrid(200)
        plant = PlantSpec.uniform(grid, q=1.0)
        C = ObservationFunctional.point(grid, 0.0)
        probe = strict_properness_probe(plant, C, "left", [50.0, 100.0, 200.0, 400.0, 800.0])
        assert probe.strictly_decreasing
        assert probe.within_bound

    def test_invalid_s_values(self):
        grid = SpatialGrid(16)
        plant = PlantSpec.uniform(grid, q=1.0)
        C = ObservationFunctional.point(grid, 0.0)
        with pytest.raises(ConfigError):
            strict_properness_probe(plant, C, "left", [100.0, 50.0])
        with pytest.raises(ConfigError):
            strict_properness_probe(plant, C, "middle", [50.0])  # type: ignore[arg-type]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

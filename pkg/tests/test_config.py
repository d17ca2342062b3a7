"""
Tests for scenario loading, validation and commented saving.
"""

import json

import numpy as np
import pytest

from schro_reg import config_loader
from schro_reg.config import DEFAULT_POLES_D, Settings
from schro_reg.core import SpatialGrid
from schro_reg.errors import ConfigError


class TestScenarioLoader:
    """Test the scenario loader."""

    def test_reference_without_path(self):
        scenario = config_loader.ScenarioLoader().load()
        assert scenario.name == "reference"
        assert scenario.plant.q == 1.0
        assert scenario.numerics.n_cells == 200
        assert scenario.numerics.dt == 1e-4

    def test_save_and_load(self, tmp_path):
        path = tmp_path / "scenarios" / "custom.yaml"
        custom = config_loader.Scenario(name="custom")
        custom.tuning.c_s = 1.5
        custom.initial.v_coefficients = [0.0, 0.3j]

        written = config_loader.ScenarioLoader(path).save(custom)
        assert written == path

        loaded = config_loader.ScenarioLoader(path).load()
        assert loaded.name == "custom"
        assert loaded.tuning.c_s == 1.5
        assert loaded.initial.v_coefficients == [0.0, 0.3j]
        assert loaded.exosystem.S_d == custom.exosystem.S_d

    def test_saved_file_has_comments(self, tmp_path):
        path = tmp_path / "scenario.yaml"
        config_loader.ScenarioLoader(path).save(config_loader.Scenario())
        text = path.read_text()
        assert "# Robin parameter at x = 0" in text
        assert "# Spatial cells" in text

    def test_loader_caches(self, tmp_path):
        path = tmp_path / "scenario.yaml"
        path.write_text("name: cached\n")
        loader = config_loader.ScenarioLoader(path)
        first = loader.load()
        path.write_text("name: changed\n")
        assert loader.load() is first

    def test_save_without_scenario(self, tmp_path):
        with pytest.raises(ValueError):
            config_loader.ScenarioLoader(tmp_path / "x.yaml").save()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            config_loader.ScenarioLoader(tmp_path / "missing.yaml").load()

    def test_unparsable_file(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("plant: [unclosed\n")
        with pytest.raises(ConfigError, match="cannot parse"):
            config_loader.ScenarioLoader(path).load()

    def test_top_level_list(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            config_loader.ScenarioLoader(path).load()

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "extra.yaml"
        path.write_text("plant:\n  q: 1.0\n  stiffness: 3\n")
        with pytest.raises(ConfigError, match="invalid scenario"):
            config_loader.ScenarioLoader(path).load()

    def test_json_scenario(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({"name": "json", "mode": "kernels", "plant": {"q": 2.0}}))
        scenario = config_loader.load_scenario(path)
        assert scenario.name == "json"
        assert scenario.mode == config_loader.Mode.KERNELS
        assert scenario.plant.q == 2.0


class TestScenarioModel:
    """Test scenario fields and builders."""

    def test_complex_pair(self):
        obs = config_loader.ObservationConfig(theta=[1, 2])
        assert obs.theta == 1 + 2j

    def test_invalid_complex(self):
        with pytest.raises(Exception):
            config_loader.ObservationConfig(theta=[1, 2, 3])

    def test_negative_q(self):
        with pytest.raises(Exception):
            config_loader.PlantConfig(q=-1.0)

    def test_with_numerics(self):
        base = config_loader.Scenario()
        small = base.with_numerics(n_cells=20, horizon=0.5)
        assert small.numerics.n_cells == 20
        assert small.numerics.horizon == 0.5
        assert small.numerics.dt == base.numerics.dt
        assert base.numerics.n_cells == 200
        assert base.with_numerics() is base

    def test_with_numerics_invalid(self):
        with pytest.raises(ConfigError, match="numerics override"):
            config_loader.Scenario().with_numerics(n_cells=4)

    def test_builders(self):
        scenario = config_loader.Scenario().with_numerics(n_cells=20)
        grid = scenario.grid()
        plant = scenario.build_plant(grid)
        C = scenario.build_observation(grid)
        assert grid.n_cells == 20
        np.testing.assert_allclose(plant.h.values, 0.5)
        assert C.x0 == 0.3
        np.testing.assert_allclose(C.c.values, 0.5)

    def test_default_poles(self):
        scenario = config_loader.Scenario()
        poles_r, poles_d = scenario.poles(scenario.build_exosystem())
        assert poles_r == [-1.0, -2.0]
        assert poles_d == [complex(p) for p in DEFAULT_POLES_D[:3]]

    def test_explicit_poles(self):
        scenario = config_loader.Scenario(tuning={"poles_r": [[-1, 1], [-1, -1]]})
        poles_r, _ = scenario.poles(scenario.build_exosystem())
        assert poles_r == [-1 + 1j, -1 - 1j]

    def test_w_hat_error(self):
        scenario = config_loader.Scenario()
        E = scenario.build_exosystem()
        np.testing.assert_allclose(scenario.w_hat_error(E), 0.1)
        scenario.initial.w_hat_error = [0.1, 0.2]
        with pytest.raises(ConfigError, match="5 entries"):
            scenario.w_hat_error(E)


class TestProfiles:
    """Test built-in profiles."""

    @pytest.fixture
    def grid(self):
        return SpatialGrid(10)

    def test_constant(self, grid):
        profile = config_loader.build_profile(2.0, grid)
        np.testing.assert_allclose(profile.values, 2.0)

    def test_inline_samples_are_interpolated(self, grid):
        profile = config_loader.build_profile([0.0, 1.0], grid)
        np.testing.assert_allclose(profile.values, grid.nodes)

    def test_sinusoid(self, grid):
        spec = config_loader.ProfileSpec(kind="sinusoid", value=1.0, amplitude=2.0)
        profile = config_loader.build_profile(spec, grid)
        np.testing.assert_allclose(profile.values, 1.0 + 2.0 * np.sin(2 * np.pi * grid.nodes))

    def test_gaussian_bump_peaks_at_center(self, grid):
        spec = config_loader.ProfileSpec(kind="gaussian-bump", center=0.5, width=0.1)
        profile = config_loader.build_profile(spec, grid)
        assert np.argmax(profile.values.real) == 5
        assert profile.values[5].real == pytest.approx(1.0)

    def test_single_sample_rejected(self):
        with pytest.raises(Exception):
            config_loader.ProfileSpec(kind="samples", samples=[1.0])

    def test_samples_kind_needs_samples(self, grid):
        spec = config_loader.ProfileSpec(kind="samples")
        with pytest.raises(ConfigError):
            config_loader.build_profile(spec, grid)

    def test_unknown_kind(self):
        with pytest.raises(Exception):
            config_loader.ProfileSpec(kind="triangle")


class TestLoggingConfig:
    """Test logging configuration validation."""

    def test_invalid_level(self):
        with pytest.raises(Exception):
            config_loader.LoggingConfig(level="INVALID")

    def test_level_is_uppercased(self):
        assert config_loader.LoggingConfig(level="debug").level == "DEBUG"

    def test_path_expands_home(self):
        cfg = config_loader.LoggingConfig(path="~/schro.log")
        assert "~" not in str(cfg.path)


class TestSettings:
    """Test environment overrides."""

    def test_defaults(self):
        settings = Settings()
        assert settings.kernel_tol == 1e-12
        assert settings.log_path is None

    def test_env_override(self, monkeypatch, tmp_path):
        monkeypatch.setenv("SCHRO_REG_LOG_LEVEL", "warning")
        monkeypatch.setenv("SCHRO_REG_KERNEL_MAX_ITER", "50")
        monkeypatch.setenv("SCHRO_REG_LOG_PATH", str(tmp_path / "logs" / "run.log"))
        settings = Settings()
        assert settings.log_level == "WARNING"
        assert settings.kernel_max_iter == 50
        settings.ensure_directories()
        assert (tmp_path / "logs").is_dir()

    def test_invalid_env_value(self, monkeypatch):
        monkeypatch.setenv("SCHRO_REG_LOG_LEVEL", "LOUD")
        with pytest.raises(Exception):
            Settings()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

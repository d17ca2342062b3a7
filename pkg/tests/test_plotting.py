"""
Tests for SVG plots.
"""

import numpy as np
import pytest

from schro_reg.errors import ConfigError
from schro_reg.helpers.plotting import emit_plot
from schro_reg.sim import TimeSeries


@pytest.fixture
def series():
    t = np.linspace(0.0, 1.0, 21)
    return TimeSeries(t, {"e_y": np.exp(-t) * (1 + 1j), "E": np.exp(-2 * t)})


class TestEmitPlot:
    """Test chart output."""

    def test_writes_svg(self, series, tmp_path):
        path = emit_plot(series, ["e_y", "E"], tmp_path / "plots" / "decay.svg", title="decay")
        text = path.read_text()
        assert text.lstrip().startswith("<?xml")
        assert "<svg" in text

    def test_byte_stable(self, series, tmp_path):
        first = emit_plot(series, ["e_y"], tmp_path / "a.svg", log_scale=True)
        second = emit_plot(series, ["e_y"], tmp_path / "b.svg", log_scale=True)
        assert first.read_bytes() == second.read_bytes()

    def test_log_scale_with_zero_values(self, tmp_path):
        t = np.linspace(0.0, 1.0, 5)
        flat = TimeSeries(t, {"x": np.zeros(5)})
        assert emit_plot(flat, ["x"], tmp_path / "zero.svg", log_scale=True).exists()

    def test_unknown_column(self, series, tmp_path):
        with pytest.raises(ConfigError, match="unknown column"):
            emit_plot(series, ["v"], tmp_path / "bad.svg")

    def test_empty_series(self, tmp_path):
        empty = TimeSeries(np.zeros(0), {})
        assert emit_plot(empty, ["e_y"], tmp_path / "empty.svg").exists()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

"""
Tests for utility functions.
"""

from pathlib import Path
from unittest.mock import patch

import pytest
from loguru import logger

from schro_reg.utils import format_duration, logging_disabled, path_with_tilde, setup_logging


class TestFormatDuration:
    """Test duration formatting."""

    def test_subsecond(self):
        assert format_duration(0.42) == "0.42s"
        assert format_duration(0) == "0.00s"

    def test_seconds_only(self):
        assert format_duration(53) == "53.0s"
        assert format_duration(9.5) == "9.5s"

    def test_minutes_and_seconds(self):
        assert format_duration(130) == "2m10s"
        assert format_duration(413) == "6m53s"

    def test_minutes_only(self):
        assert format_duration(240) == "4m"
        assert format_duration(60) == "1m"

    def test_hours(self):
        assert format_duration(3661) == "1h1m"
        assert format_duration(3600) == "1h"
        assert format_duration(7384) == "2h3m"


class TestPaths:
    """Test path display helpers."""

    def test_home_is_abbreviated(self):
        path = Path.home() / "runs" / "out"
        assert path_with_tilde(path) == str(Path("~") / "runs" / "out")

    def test_other_paths_unchanged(self):
        assert path_with_tilde(Path("/opt/runs")) == "/opt/runs"


class TestLoggingSetup:
    """Test logging setup behavior."""

    @pytest.mark.parametrize("value", ["0", "false", "No", "off"])
    def test_disabled_values(self, monkeypatch, value):
        monkeypatch.setenv("SCHRO_REG_LOG", value)
        assert logging_disabled()

    def test_enabled_by_default(self, monkeypatch):
        monkeypatch.delenv("SCHRO_REG_LOG", raising=False)
        assert not logging_disabled()

    def test_setup_logging_disabled(self, monkeypatch):
        monkeypatch.setenv("SCHRO_REG_LOG", "0")
        with patch.object(logger, "remove") as remove_mock, patch.object(logger, "add") as add_mock:
            setup_logging()
            assert remove_mock.called
            add_mock.assert_not_called()

    def test_setup_logging_stderr_only(self, monkeypatch):
        monkeypatch.delenv("SCHRO_REG_LOG", raising=False)
        monkeypatch.delenv("SCHRO_REG_LOG_PATH", raising=False)
        with patch.object(logger, "remove"), patch.object(logger, "add") as add_mock:
            setup_logging("debug")
            assert add_mock.call_count == 1
            assert add_mock.call_args.kwargs["level"] == "DEBUG"

    def test_setup_logging_with_file(self, monkeypatch, tmp_path):
        monkeypatch.delenv("SCHRO_REG_LOG", raising=False)
        log_path = tmp_path / "logs" / "schro-reg.log"
        with patch.object(logger, "remove"), patch.object(logger, "add") as add_mock:
            setup_logging("INFO", log_path)
            assert add_mock.call_count == 2
            assert add_mock.call_args_list[1].args[0] == log_path
            assert add_mock.call_args_list[1].kwargs["rotation"] == "10 MB"
        assert log_path.parent.is_dir()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

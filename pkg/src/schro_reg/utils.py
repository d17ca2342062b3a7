"""
Utility functions for schro-reg.
"""

import os
import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from schro_reg.config import Settings

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} - {name} - {level} - {message}"


def format_duration(seconds: float) -> str:
    """
    Format a wall-clock duration to a short human-readable string.

    Examples:
        0.42 -> "0.42s"
        53 -> "53.0s"
        130 -> "2m10s"
        3661 -> "1h1m"

    Args:
        seconds: Duration in seconds

    Returns:
        Human-readable duration string
    """
    if seconds < 1:
        return f"{seconds:.2f}s"
    if seconds < 60:
        return f"{seconds:.1f}s"

    minutes, remaining_seconds = divmod(int(round(seconds)), 60)
    if minutes < 60:
        if remaining_seconds == 0:
            return f"{minutes}m"
        return f"{minutes}m{remaining_seconds}s"

    hours, remaining_minutes = divmod(minutes, 60)
    if remaining_minutes == 0:
        return f"{hours}h"
    return f"{hours}h{remaining_minutes}m"


def logging_disabled() -> bool:
    value = os.getenv("SCHRO_REG_LOG", "").strip().lower()
    return value in {"0", "false", "no", "off"}


def setup_logging(level: Optional[str] = None, log_path: Optional[Path] = None) -> None:
    """
    Set up loguru sinks.

    Replaces the default handler with a stderr sink and, when a log path is configured,
    a rotating file sink. SCHRO_REG_LOG=0/false/no/off silences everything.

    Args:
        level: Log level (default: Settings().log_level)
        log_path: Log file (default: Settings().log_path)
    """
    logger.remove()
    if logging_disabled():
        return

    settings = Settings()
    level = (level or settings.log_level).upper()
    log_path = log_path or settings.log_path

    logger.add(sys.stderr, format=LOG_FORMAT, level=level)
    if log_path is not None:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        logger.add(log_path, rotation="10 MB", retention=5, format=LOG_FORMAT, level=level)


def path_with_tilde(path: Path) -> str:
    """Convert path to string, replacing home directory with ~."""
    home = str(Path.home())
    path_str = str(path)
    return "~" + path_str[len(home) :] if path_str.startswith(home) else path_str

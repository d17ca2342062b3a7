"""
Runtime settings and constants for schro-reg.
"""

from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Numerical tolerances shared by the solvers
KERNEL_TOL = 1e-12
KERNEL_MAX_ITER = 500
RECIPROCAL_TOL = 1e-12
RECIPROCAL_MAX_ITER = 500
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 60
ROOT_COLLISION_DISTANCE = 1e-6
SOLVABILITY_TOL = 1e-8
IMAG_RESIDUE_TOL = 1e-9
POLE_PLACEMENT_TOL = 1e-9
REGULATOR_FD_FACTOR = 2.0
DIVERGENCE_CAP = 1e6
MIN_KERNEL_CELLS = 8
MODAL_COUNT = 200

# Default placed poles for the reference and disturbance observers
DEFAULT_POLES_R = (-1.0, -2.0, -3.0, -4.0)
DEFAULT_POLES_D = (-1.5, -2.5, -3.5, -4.5)


class Settings(BaseSettings):
    """Process-wide settings, overridable through SCHRO_REG_* environment variables."""

    model_config = SettingsConfigDict(env_prefix="SCHRO_REG_")

    log_level: str = Field(default="INFO", description="stderr log level")
    log_path: Optional[Path] = Field(default=None, description="Optional rotating log file")
    kernel_tol: float = Field(default=KERNEL_TOL, gt=0)
    kernel_max_iter: int = Field(default=KERNEL_MAX_ITER, ge=1)
    reciprocal_tol: float = Field(default=RECIPROCAL_TOL, gt=0)
    newton_tol: float = Field(default=NEWTON_TOL, gt=0)
    divergence_cap: float = Field(default=DIVERGENCE_CAP, gt=0)
    modal_count: int = Field(default=MODAL_COUNT, ge=1)

    @field_validator("log_level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        """Validate log level is valid."""
        valid_levels = {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"}
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of {valid_levels}")
        return v.upper()

    @field_validator("log_path", mode="before")
    @classmethod
    def expand_path(cls, v: Optional[str | Path]) -> Optional[Path]:
        """Expand ~ in path."""
        if v is None or v == "":
            return None
        return Path(v).expanduser()

    def ensure_directories(self) -> None:
        """Ensure the log directory exists."""
        if self.log_path is not None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)

"""
Scenario documents for schro-reg: pydantic models, YAML/JSON loading and commented saving.

The defaults of every section reproduce the reference scenario, so `Scenario()` is a
complete, valid document.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any, Literal, Optional, Union, cast

import numpy as np
from loguru import logger
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    ValidationError,
    field_validator,
)
from pydantic.fields import FieldInfo

from schro_reg.config import DEFAULT_POLES_D, DEFAULT_POLES_R, MIN_KERNEL_CELLS
from schro_reg.core import (
    ComplexProfile,
    ExosystemSpec,
    ObservationFunctional,
    PlantSpec,
    SpatialGrid,
)
from schro_reg.errors import ConfigError

if TYPE_CHECKING:
    from ruamel.yaml.comments import CommentedMap


def _parse_complex(value: Any) -> complex:
    if isinstance(value, complex):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ValueError(f"expected a number or an [re, im] pair, got {value!r}")


def _dump_complex(value: complex) -> float | list[float]:
    if value.imag == 0:
        return value.real
    return [value.real, value.imag]


ComplexValue = Annotated[
    complex, BeforeValidator(_parse_complex), PlainSerializer(_dump_complex)
]


class Mode(str, Enum):
    """What a run computes."""

    KERNELS = "kernels"
    SPECTRUM = "spectrum"
    REGULATE = "regulate"
    OBSERVE = "observe"
    CLOSEDLOOP = "closedloop"
    VERIFY = "verify"


class ProfileSpec(BaseModel):
    """Named built-in profile on [0, 1]."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "sinusoid", "gaussian-bump", "samples"] = Field(
        description="constant | sinusoid | gaussian-bump | samples"
    )
    value: float = Field(default=0.0, description="Constant value, or offset for the other kinds")
    amplitude: float = Field(default=1.0, description="Sinusoid or bump amplitude")
    frequency: float = Field(default=1.0, description="Sinusoid frequency in cycles on [0, 1]")
    phase: float = Field(default=0.0, description="Sinusoid phase in radians")
    center: float = Field(default=0.5, description="Bump center")
    width: float = Field(default=0.1, gt=0, description="Bump standard deviation")
    samples: list[float] = Field(
        default_factory=list, description="Uniform samples on [0, 1], interpolated to the grid"
    )

    @field_validator("samples")
    @classmethod
    def validate_samples(cls, v: list[float]) -> list[float]:
        """Reject single-sample lists."""
        if len(v) == 1:
            raise ValueError("samples need at least two values")
        return v

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full_like(x, self.value)
        if self.kind == "sinusoid":
            return self.value + self.amplitude * np.sin(2 * np.pi * self.frequency * x + self.phase)
        if self.kind == "gaussian-bump":
            return self.value + self.amplitude * np.exp(-0.5 * ((x - self.center) / self.width) ** 2)
        if len(self.samples) < 2:
            raise ConfigError("profile kind 'samples' needs at least two samples")
        nodes = np.linspace(0.0, 1.0, len(self.samples))
        return np.interp(x, nodes, self.samples)


ProfileInput = Union[float, list[float], ProfileSpec]


def build_profile(spec: ProfileInput, grid: SpatialGrid) -> ComplexProfile:
    """Sample a number, an inline list or a ProfileSpec on grid."""
    x = grid.nodes
    if isinstance(spec, ProfileSpec):
        return grid.profile(spec.evaluate(x))
    if isinstance(spec, list):
        return grid.profile(ProfileSpec(kind="samples", samples=spec).evaluate(x))
    return grid.constant(float(spec))


def _rotation(omega: float) -> list[list[float]]:
    return [[0.0, omega], [-omega, 0.0]]


class PlantConfig(BaseModel):
    """Plant coefficients."""

    model_config = ConfigDict(extra="forbid")

    q: float = Field(default=1.0, ge=0, description="Robin parameter at x = 0 (anti-damping)")
    h: ProfileInput = Field(default=0.5, description="Real potential h(x)")
    g: ProfileInput = Field(default=1.0, description="Disturbance shape g(x)")


class ExosystemConfig(BaseModel):
    """Exosystem blocks and output couplings."""

    model_config = ConfigDict(extra="forbid")

    S_d: list[list[float]] = Field(
        default_factory=lambda: [[0.0, 0.0, 0.0], [0.0, 0.0, 2.0], [0.0, -2.0, 0.0]],
        description="Disturbance generator block",
    )
    S_r: list[list[float]] = Field(
        default_factory=lambda: _rotation(1.0), description="Reference generator block"
    )
    q_d1: list[float] = Field(
        default_factory=lambda: [1.0, 1.0, 0.0], description="Distributed disturbance output"
    )
    q_d2: list[float] = Field(
        default_factory=lambda: [0.5, 0.0, 1.0], description="Boundary disturbance output"
    )
    q_r: list[float] = Field(default_factory=lambda: [1.0, 0.0], description="Reference output")
    w0: list[float] = Field(
        default_factory=lambda: [0.5, 1.0, 0.0, 1.0, 0.0],
        description="Initial exosystem state [w_d; w_r]",
    )


class ObservationConfig(BaseModel):
    """Performance output C_e[z] = theta z(x0) + int c z."""

    model_config = ConfigDict(extra="forbid")

    theta: ComplexValue = Field(default=1.0, description="Point-evaluation weight")
    x0: float = Field(default=0.3, ge=0, le=1, description="Point-evaluation location")
    c: ProfileInput = Field(default=0.5, description="Distributed observation weight c(x)")


class TuningConfig(BaseModel):
    """Target damping and placed observer poles."""

    model_config = ConfigDict(extra="forbid")

    c_s: float = Field(default=1.0, ge=0, description="Target damping of the state loop")
    c_o: float = Field(default=2.0, ge=0, description="Target damping of the observer error")
    poles_r: Optional[list[ComplexValue]] = Field(
        default=None, description="Poles of S_r + l_r q_r^T (default: -1, -2, ...)"
    )
    poles_d: Optional[list[ComplexValue]] = Field(
        default=None, description="Poles of S_d + l_d n(1)^T (default: -1.5, -2.5, ...)"
    )

    @field_validator("c_s", "c_o")
    @classmethod
    def warn_zero_damping(cls, v: float) -> float:
        """Zero damping is an oracle setting."""
        if v == 0:
            logger.warning("Target damping 0 requested: oracle setting, no closed-loop decay")
        return v


class NumericsConfig(BaseModel):
    """Discretization and run length."""

    model_config = ConfigDict(extra="forbid")

    n_cells: int = Field(default=200, ge=MIN_KERNEL_CELLS, description="Spatial cells")
    dt: float = Field(default=1e-4, gt=0, description="Time step")
    horizon: float = Field(default=10.0, gt=0, description="Simulated time")
    observer_horizon: float = Field(
        default=3.0, gt=0, description="Horizon of the observe mode (plant runs open loop)"
    )
    record_every: int = Field(default=10, ge=1, description="Record every this many steps")
    spectrum_count: int = Field(default=50, ge=5, description="Eigenvalues in the spectrum mode")


class InitialConfig(BaseModel):
    """Initial data, built in target coordinates so the boundary conditions hold."""

    model_config = ConfigDict(extra="forbid")

    v_coefficients: list[ComplexValue] = Field(
        default_factory=lambda: [0.0, 0.5, 0.0, 0.2],
        description="Cosine coefficients of the regulation error v~(0)",
    )
    e_coefficients: list[ComplexValue] = Field(
        default_factory=lambda: [0.1, 0.3],
        description="Cosine coefficients of the transformed observer error e~(0)",
    )
    w_hat_error: Optional[list[float]] = Field(
        default=None, description="Initial exosystem estimate error (default 0.1 per entry)"
    )


class LoggingConfig(BaseModel):
    """Logging configuration."""

    model_config = ConfigDict(extra="forbid")

    level: str = Field(default="INFO", description="Log level (DEBUG, INFO, WARNING, ERROR)")
    path: Optional[Path] = Field(default=None, description="Optional rotating log file")

    @field_validator("path", mode="before")
    @classmethod
    def expand_path(cls, v: Union[str, Path, None]) -> Optional[Path]:
        """Expand ~ in path."""
        if v is None or v == "":
            return None
        return Path(v).expanduser()

    @field_validator("level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        """Validate log level is valid."""
        valid_levels = {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"}
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of {valid_levels}")
        return v.upper()


class Scenario(BaseModel):
    """Complete scenario document."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(default="reference", description="Scenario name copied into reports")
    mode: Optional[Mode] = Field(default=None, description="Default mode when the CLI names none")
    plant: PlantConfig = Field(default_factory=PlantConfig)
    exosystem: ExosystemConfig = Field(default_factory=ExosystemConfig)
    observation: ObservationConfig = Field(default_factory=ObservationConfig)
    tuning: TuningConfig = Field(default_factory=TuningConfig)
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    initial: InitialConfig = Field(default_factory=InitialConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    def with_numerics(
        self,
        n_cells: Optional[int] = None,
        dt: Optional[float] = None,
        horizon: Optional[float] = None,
    ) -> Scenario:
        """Copy with command-line overrides applied and revalidated."""
        update = {
            key: value
            for key, value in (("n_cells", n_cells), ("dt", dt), ("horizon", horizon))
            if value is not None
        }
        if not update:
            return self
        data = self.numerics.model_dump()
        data.update(update)
        try:
            numerics = NumericsConfig(**data)
        except ValidationError as e:
            raise ConfigError(f"invalid numerics override: {e}") from None
        return self.model_copy(update={"numerics": numerics})

    def grid(self) -> SpatialGrid:
        return SpatialGrid(self.numerics.n_cells)

    def build_plant(self, grid: SpatialGrid) -> PlantSpec:
        return PlantSpec(
            self.plant.q, build_profile(self.plant.h, grid), build_profile(self.plant.g, grid)
        )

    def build_exosystem(self) -> ExosystemSpec:
        """Raises ExosystemError or DimensionError when the blocks violate the assumptions."""
        e = self.exosystem
        return ExosystemSpec(
            S_d=np.array(e.S_d, dtype=float),
            S_r=np.array(e.S_r, dtype=float),
            q_d1=np.array(e.q_d1, dtype=float),
            q_d2=np.array(e.q_d2, dtype=float),
            q_r=np.array(e.q_r, dtype=float),
            w0=np.array(e.w0, dtype=float),
        )

    def build_observation(self, grid: SpatialGrid) -> ObservationFunctional:
        o = self.observation
        return ObservationFunctional(o.theta, o.x0, build_profile(o.c, grid))

    def poles(self, E: ExosystemSpec) -> tuple[list[complex], list[complex]]:
        """Desired observer poles, defaulting to the first n_r / n_d built-in values."""
        poles_r = self.tuning.poles_r
        poles_d = self.tuning.poles_d
        if poles_r is None:
            if E.n_r > len(DEFAULT_POLES_R):
                raise ConfigError(f"give tuning.poles_r explicitly for n_r = {E.n_r}")
            poles_r = [complex(p) for p in DEFAULT_POLES_R[: E.n_r]]
        if poles_d is None:
            if E.n_d > len(DEFAULT_POLES_D):
                raise ConfigError(f"give tuning.poles_d explicitly for n_d = {E.n_d}")
            poles_d = [complex(p) for p in DEFAULT_POLES_D[: E.n_d]]
        return list(poles_r), list(poles_d)

    def w_hat_error(self, E: ExosystemSpec) -> np.ndarray:
        if self.initial.w_hat_error is None:
            return np.full(E.n_w, 0.1)
        error = np.asarray(self.initial.w_hat_error, dtype=float)
        if error.shape != (E.n_w,):
            raise ConfigError(f"initial.w_hat_error must have {E.n_w} entries")
        return error


def _get_field_description(model: type[BaseModel], field_name: str) -> Optional[str]:
    """
    Extract description from a Pydantic field.

    Args:
        model: Pydantic model class
        field_name: Name of the field

    Returns:
        Field description or None
    """
    field_info = model.model_fields.get(field_name)
    if field_info and isinstance(field_info, FieldInfo):
        return field_info.description
    return None


def _create_commented_map(data: dict[str, Any], model: type[BaseModel]) -> "CommentedMap":
    """
    Create a CommentedMap with inline comments from Pydantic field descriptions.

    Args:
        data: Dictionary data to convert
        model: Pydantic model class to extract descriptions from

    Returns:
        CommentedMap with inline comments
    """
    from ruamel.yaml.comments import CommentedMap, CommentedSeq

    cm = CommentedMap()

    for key, value in data.items():
        if isinstance(value, dict):
            field_info = model.model_fields.get(key)
            if field_info and hasattr(field_info.annotation, "model_fields"):
                cm[key] = _create_commented_map(value, cast(type[BaseModel], field_info.annotation))
            else:
                cm[key] = CommentedMap(value)
        elif isinstance(value, list) and value and isinstance(value[0], list):
            # Matrix rows stay on one line each
            rows = CommentedSeq()
            for row in value:
                seq = CommentedSeq(row)
                seq.fa.set_flow_style()
                rows.append(seq)
            cm[key] = rows
        elif isinstance(value, list):
            seq = CommentedSeq(value)
            seq.fa.set_flow_style()
            cm[key] = seq
        else:
            cm[key] = value

        description = _get_field_description(model, key)
        if description:
            cm.yaml_add_eol_comment(description, key)

    return cm


class ScenarioLoader:
    """Loads, caches and saves scenario documents."""

    def __init__(self, path: Optional[Path] = None):
        """
        Initialize scenario loader.

        Args:
            path: Scenario file (YAML or JSON); None means the reference scenario
        """
        self.path = path
        self._scenario: Optional[Scenario] = None

    def load(self) -> Scenario:
        """
        Parse and validate the scenario file.

        Returns:
            Scenario instance

        Raises:
            ConfigError: If the file is missing, unparsable or invalid
        """
        if self._scenario is not None:
            return self._scenario

        if self.path is None:
            logger.debug("No scenario file given, using the reference scenario")
            self._scenario = self.reference()
            return self._scenario

        if not self.path.exists():
            raise ConfigError(f"scenario file not found: {self.path}")

        import yaml

        try:
            with open(self.path, "r") as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {self.path}: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{self.path} must contain a mapping at the top level")

        try:
            self._scenario = Scenario(**data)
        except ValidationError as e:
            raise ConfigError(f"invalid scenario {self.path}: {e}") from None
        logger.debug(f"Loaded scenario {self._scenario.name!r} from {self.path}")
        return self._scenario

    def save(self, scenario: Optional[Scenario] = None, path: Optional[Path] = None) -> Path:
        """
        Write a scenario as YAML with inline comments from the field descriptions.

        Args:
            scenario: Scenario to save (default: the loaded one)
            path: Target file (default: the loader's path)

        Returns:
            Path written
        """
        if scenario is None:
            if self._scenario is None:
                raise ValueError("No scenario loaded or provided to save")
            scenario = self._scenario
        target = path or self.path
        if target is None:
            raise ValueError("No path to save the scenario to")

        target.parent.mkdir(parents=True, exist_ok=True)
        data = scenario.model_dump(mode="json", exclude_none=True)
        commented = _create_commented_map(data, Scenario)

        from ruamel.yaml import YAML

        yaml_writer = YAML()
        yaml_writer.default_flow_style = False
        yaml_writer.width = 4096

        with open(target, "w") as f:
            yaml_writer.dump(commented, f)

        logger.info(f"Scenario saved to {target}")
        return target

    @staticmethod
    def reference() -> Scenario:
        """The reference scenario used by the verification suite."""
        return Scenario()


def load_scenario(path: Optional[Path] = None) -> Scenario:
    """
    Convenience function to load a scenario.

    Args:
        path: Optional scenario file

    Returns:
        Scenario instance
    """
    return ScenarioLoader(path).load()

"""
Objects every mode handler needs, built once from a validated scenario.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
from loguru import logger

from schro_reg.config import Settings
from schro_reg.config_loader import Scenario
from schro_reg.core import ExosystemSpec, ObservationFunctional, PlantSpec, SpatialGrid
from schro_reg.errors import ConfigError
from schro_reg.kernels import KernelSet, build_kernels
from schro_reg.regulator import GainSet, assemble_gains
from schro_reg.sim import SimConfig


@dataclass(frozen=True, eq=False)
class ScenarioContext:
    """Validated scenario plus the specs, kernels and gains derived from it."""

    scenario: Scenario
    settings: Settings
    grid: SpatialGrid
    plant: PlantSpec
    exosystem: ExosystemSpec
    observation: ObservationFunctional
    gains_path: Optional[Path] = None

    @classmethod
    def build(
        cls,
        scenario: Scenario,
        settings: Optional[Settings] = None,
        gains_path: Optional[Path] = None,
    ) -> ScenarioContext:
        """
        Raises:
            ConfigError: If any embedded spec fails validation
        """
        grid = scenario.grid()
        return cls(
            scenario=scenario,
            settings=settings or Settings(),
            grid=grid,
            plant=scenario.build_plant(grid),
            exosystem=scenario.build_exosystem(),
            observation=scenario.build_observation(grid),
            gains_path=gains_path,
        )

    def sim_config(
        self, horizon: Optional[float] = None, snapshot_every: int = 0
    ) -> SimConfig:
        numerics = self.scenario.numerics
        return SimConfig(
            grid=self.grid,
            dt=numerics.dt,
            horizon=numerics.horizon if horizon is None else horizon,
            record_every=numerics.record_every,
            snapshot_every=snapshot_every,
            divergence_cap=self.settings.divergence_cap,
        )

    @cached_property
    def kernels(self) -> KernelSet:
        tuning = self.scenario.tuning
        return build_kernels(
            self.plant,
            tuning.c_s,
            tuning.c_o,
            self.grid,
            tol=self.settings.kernel_tol,
            max_iter=self.settings.kernel_max_iter,
            reciprocal_tol=self.settings.reciprocal_tol,
        )

    @cached_property
    def gains(self) -> GainSet:
        """Gains loaded from gains_path when given, otherwise assembled."""
        tuning = self.scenario.tuning
        if self.gains_path is not None:
            from schro_reg.helpers.export import load_gains

            gains = load_gains(self.gains_path)
            if gains.grid != self.grid:
                raise ConfigError(
                    f"gains were computed on {gains.grid.n_cells} cells, "
                    f"scenario uses {self.grid.n_cells}"
                )
            if (gains.kernels.c_s, gains.kernels.c_o) != (tuning.c_s, tuning.c_o):
                raise ConfigError("gains were computed for different c_s / c_o")
            if len(gains.m) != self.exosystem.n_w or len(gains.n) != self.exosystem.n_d:
                raise ConfigError("gains were computed for a different exosystem")
            logger.info(f"Reusing gains from {self.gains_path}")
            return gains

        desired_r, desired_d = self.scenario.poles(self.exosystem)
        return assemble_gains(
            self.plant,
            self.exosystem,
            self.observation,
            tuning.c_s,
            tuning.c_o,
            desired_r,
            desired_d,
            self.grid,
            kernels=self.kernels,
        )

    @property
    def w0(self) -> np.ndarray:
        return np.asarray(self.exosystem.w0, dtype=float)

    def snapshot_stride(self, horizon: float, count: int = 10) -> int:
        steps = int(round(horizon / self.scenario.numerics.dt))
        return max(1, steps // count)

"""
Shared fixtures: the reference scenario on coarse grids.
"""

import pytest

from schro_reg.config_loader import Scenario
from schro_reg.modes import ScenarioContext


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch):
    """Keep loguru from binding sinks to streams the test runner swaps out."""
    monkeypatch.setenv("SCHRO_REG_LOG", "0")


def small_scenario(n_cells: int = 40, dt: float = 1e-3, horizon: float = 0.5) -> Scenario:
    return Scenario().with_numerics(n_cells=n_cells, dt=dt, horizon=horizon)


@pytest.fixture(scope="session")
def coarse_ctx():
    """Reference scenario on 40 cells with gains assembled once per session."""
    ctx = ScenarioContext.build(small_scenario())
    _ = ctx.gains
    return ctx


@pytest.fixture(scope="session")
def fine_ctx():
    """Reference scenario on 80 cells, dt 5e-4, for the closed-loop accuracy tests."""
    ctx = ScenarioContext.build(small_scenario(n_cells=80, dt=5e-4, horizon=1.0))
    _ = ctx.gains
    return ctx

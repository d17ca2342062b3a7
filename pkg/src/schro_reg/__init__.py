"""
schro-reg: Backstepping output regulation for a boundary-controlled Schrödinger equation.

Solves the control and observer kernels, synthesizes the regulator and simulates the
state-feedback, observer and output-feedback loops.
"""

__version__ = "1.0.0"

from schro_reg.config import Settings
from schro_reg.config_loader import Scenario, ScenarioLoader, load_scenario
from schro_reg.errors import RegulatorError
from schro_reg.utils import format_duration, setup_logging

__all__ = [
    "RegulatorError",
    "Scenario",
    "ScenarioLoader",
    "Settings",
    "format_duration",
    "load_scenario",
    "setup_logging",
]

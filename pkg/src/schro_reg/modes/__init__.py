"""
One handler per CLI mode. Each takes a ScenarioContext and an output directory, writes its
artifacts and returns the report it wrote.
"""

from schro_reg.modes.closedloop import handle_closedloop
from schro_reg.modes.context import ScenarioContext
from schro_reg.modes.kernels import handle_kernels
from schro_reg.modes.observe import handle_observe
from schro_reg.modes.regulate import handle_regulate
from schro_reg.modes.spectrum import handle_spectrum
from schro_reg.modes.verify import handle_verify

MODE_HANDLERS = {
    "kernels": handle_kernels,
    "spectrum": handle_spectrum,
    "regulate": handle_regulate,
    "observe": handle_observe,
    "closedloop": handle_closedloop,
    "verify": handle_verify,
}

__all__ = [
    "MODE_HANDLERS",
    "ScenarioContext",
    "handle_closedloop",
    "handle_kernels",
    "handle_observe",
    "handle_regulate",
    "handle_spectrum",
    "handle_verify",
]

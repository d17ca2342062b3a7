"""
Time-domain simulation of the plant, the observer and the closed loops.
"""

from schro_reg.sim.runs import (
    SimConfig,
    boundary_signal,
    boundedness,
    cosine_profile,
    first_order_hold,
    manifold_state,
    observation_row,
    observer_initial_error,
    open_loop_initial_state,
    simulate_observer,
    simulate_open_loop,
    simulate_output_feedback,
    simulate_state_feedback,
    simulate_target,
    snapshot_distance,
    target_initial_state,
)
from schro_reg.sim.series import (
    SeriesRecorder,
    TimeSeries,
    decay_fit,
    energy_identity_error,
    max_ratio_deviation,
    weighted_error_norm,
)
from schro_reg.sim.stepper import CrankNicolsonStepper, LowRankTerm, step_schrodinger

__all__ = [
    "CrankNicolsonStepper",
    "LowRankTerm",
    "SeriesRecorder",
    "SimConfig",
    "TimeSeries",
    "boundary_signal",
    "boundedness",
    "cosine_profile",
    "decay_fit",
    "energy_identity_error",
    "first_order_hold",
    "manifold_state",
    "max_ratio_deviation",
    "observation_row",
    "observer_initial_error",
    "open_loop_initial_state",
    "simulate_observer",
    "simulate_open_loop",
    "simulate_output_feedback",
    "simulate_state_feedback",
    "simulate_target",
    "snapshot_distance",
    "step_schrodinger",
    "target_initial_state",
    "weighted_error_norm",
]

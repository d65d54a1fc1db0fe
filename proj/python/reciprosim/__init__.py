"""Reciprocating multi-part probe insertion workbench.

Thin wrapper around the compiled extension; everything lives in
``reciprosim._reciprosim``.
"""

from ._reciprosim import (  # noqa: F401
    CuttingParams,
    FeasibilityReport,
    ForceBudget,
    FrictionParams,
    KelvinParams,
    KelvinState,
    OpticsSpec,
    __version__,
    calibration_loss,
    compare,
    compute_field,
    cutting_force,
    feasible_reciprocal,
    friction_force,
    kelvin_step,
    profile_stats,
    schedule_position,
    seed_particles,
    segment_phases,
    simulate,
    synth_frame,
)

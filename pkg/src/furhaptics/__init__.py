"""Interactive visuo-haptic fur stroking engine.

Hand trajectories in; ultrasound-haptic command traces, device-rate focal
tapes, and fur-strand animation frames out. Includes a fitting pipeline
that recovers model parameters from measured force traces and a simulated
phased array for verifying focal commands without hardware.
"""

__version__ = "0.1.0"

from .core import (
    DEFAULT_SPEED_EPS,
    Classification,
    FurPatch,
    HandState,
    StrokeDirection,
    Trajectory,
    classify_direction,
    load_trajectory,
)
from .errors import FurHapticsError
from .fitting import (
    FitResult,
    ForceTrace,
    estimate_period,
    fit_growth,
    fit_reverse,
    load_trace,
    synthesize_trace,
)
from .force_model import (
    CycleState,
    HapticCommand,
    contact_angle,
    cycle_period,
    growth_force,
    intensity_map,
    reverse_force,
    reverse_force_peak,
    select_frequency,
    tick,
)
from .array_sim import ArrayGeometry, PhaseSolution, field_grid, pressure_at, solve_focus
from .session import CommandTrace, SessionConfig, SessionResult, run_session
from .stm import FocalSample, StmConfig, circle_radius, emit, emit_trace
from .strands import (
    HandCollider,
    StrandParams,
    StrandPatch,
    StrandState,
    grid_strands,
    new_strand,
    patch_step,
    release_update,
    step,
)

__all__ = [
    "ArrayGeometry",
    "Classification",
    "CommandTrace",
    "CycleState",
    "DEFAULT_SPEED_EPS",
    "FitResult",
    "FocalSample",
    "ForceTrace",
    "FurHapticsError",
    "FurPatch",
    "HandCollider",
    "HandState",
    "HapticCommand",
    "PhaseSolution",
    "SessionConfig",
    "SessionResult",
    "StmConfig",
    "StrandParams",
    "StrandPatch",
    "StrandState",
    "StrokeDirection",
    "Trajectory",
    "circle_radius",
    "classify_direction",
    "contact_angle",
    "cycle_period",
    "emit",
    "emit_trace",
    "estimate_period",
    "field_grid",
    "fit_growth",
    "fit_reverse",
    "grid_strands",
    "growth_force",
    "intensity_map",
    "load_trace",
    "load_trajectory",
    "new_strand",
    "patch_step",
    "pressure_at",
    "release_update",
    "reverse_force",
    "reverse_force_peak",
    "run_session",
    "select_frequency",
    "solve_focus",
    "step",
    "synthesize_trace",
    "tick",
]

"""Per-tick haptic intensity and modulation frequency from hand motion.

Stroking with the grain produces a constant reactive force, rendered as a
fixed device intensity. Stroking against the grain lifts, flips, and
releases hair bundles one after another, producing a force that is periodic
in the stroke position x with period

    P = sqrt(l^2 - h^2) + b

where l is hair length, h the hand clearance above the fur base, and b the
bundle width. Within a cycle the contact angle ramps linearly from 0 to
pi/2 over the deformation phase (x < sqrt(l^2 - h^2)), then stays at pi/2
while the hand rubs across the bundle width:

    F(x) = k * sin(theta)^2 / (h*cos(theta) + x*sin(theta))^2

The curve rises sharply from zero, peaks inside the deformation phase, and
decays as k/x^2 through the rubbing phase.

Perceived roughness is steered by the speed of the spatiotemporal
modulation circle: 70 Hz reads smooth (with grain), 30 Hz reads rough
(against grain), and 50 Hz is the neutral level used when the hand has
never moved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    DEFAULT_SPEED_EPS,
    Classification,
    FurPatch,
    HandState,
    StrokeDirection,
    classify_direction,
)
from .errors import ContractError, DomainError, InputError

GROWTH_FREQUENCY_HZ = 70.0
REVERSE_FREQUENCY_HZ = 30.0
NEUTRAL_FREQUENCY_HZ = 50.0

# Grid density for the per-patch peak-force scan (closed form has no simple
# analytic argmax on the deformation ramp).
_PEAK_SCAN_POINTS = 100_000

# Guards h -> 0 degenerate configurations without touching valid-domain results.
_DENOMINATOR_FLOOR = 1e-9


def cycle_period(hair_length: float, hand_height: float, bundle_width: float) -> float:
    """Stroke distance per lift-release cycle: sqrt(l^2 - h^2) + b."""
    if not (hair_length > 0 and bundle_width > 0 and hand_height > 0):
        raise DomainError("hair_length, hand_height and bundle_width must be positive")
    if hand_height >= hair_length:
        raise DomainError("hand above hair tips: no lift cycle exists (h >= l)")
    return math.sqrt(hair_length * hair_length - hand_height * hand_height) + bundle_width


def ramp_length(hair_length: float, hand_height: float) -> float:
    """Length of the deformation phase, sqrt(l^2 - h^2)."""
    if hand_height >= hair_length:
        raise DomainError("hand above hair tips (h >= l)")
    return math.sqrt(hair_length * hair_length - hand_height * hand_height)


def contact_angle(x: float, hair_length: float, hand_height: float, bundle_width: float) -> float:
    """Hair-skin contact angle at in-cycle position x.

    Linear ramp 0 -> pi/2 over the deformation phase, then a pi/2 plateau
    through the rubbing phase. x must already be reduced into [0, P).
    """
    period = cycle_period(hair_length, hand_height, bundle_width)
    if not 0.0 <= x < period:
        raise ContractError(f"x={x!r} outside [0, {period!r}); reduce modulo the period first")
    ramp = ramp_length(hair_length, hand_height)
    if x < ramp:
        return 0.5 * math.pi * x / ramp
    return 0.5 * math.pi


def _reverse_force_reduced(x: float, l: float, h: float, b: float, k: float) -> float:
    # x assumed in [0, P)
    theta = contact_angle(x, l, h, b)
    sin_t = math.sin(theta)
    cos_t = math.cos(theta)
    denom = (h * cos_t + x * sin_t) ** 2
    if denom < _DENOMINATOR_FLOOR:
        denom = _DENOMINATOR_FLOOR
    return k * sin_t * sin_t / denom


def reverse_force(x: float, patch: FurPatch) -> float:
    """Reactive force (N) at stroke position x for an against-grain stroke.

    x is measured from the point where the hand first touched the fur and is
    reduced modulo the cycle period internally, so the function is periodic
    for all x >= 0.
    """
    if not np.isfinite(x) or x < 0:
        raise InputError("x must be finite and >= 0")
    period = cycle_period(patch.hair_length, patch.hand_height, patch.bundle_width)
    x_reduced = math.fmod(x, period)
    if x_reduced < 0.0:
        x_reduced += period
    return _reverse_force_reduced(
        x_reduced, patch.hair_length, patch.hand_height, patch.bundle_width, patch.force_scale
    )


def growth_force(patch: FurPatch) -> float:
    """Constant reactive level for a with-grain stroke (device-intensity units)."""
    return patch.base_intensity


@lru_cache(maxsize=128)
def reverse_force_peak(hair_length: float, hand_height: float, bundle_width: float, force_scale: float) -> float:
    """Maximum of the reverse-stroke force over one cycle (dense grid scan)."""
    period = cycle_period(hair_length, hand_height, bundle_width)
    ramp = ramp_length(hair_length, hand_height)
    xs = np.linspace(0.0, period, _PEAK_SCAN_POINTS, endpoint=False)
    theta = np.where(xs < ramp, 0.5 * np.pi * xs / ramp, 0.5 * np.pi)
    sin_t = np.sin(theta)
    denom = np.maximum((hand_height * np.cos(theta) + xs * sin_t) ** 2, _DENOMINATOR_FLOOR)
    return float(np.max(force_scale * sin_t * sin_t / denom))


def intensity_map(force: float, patch: FurPatch, mode: StrokeDirection) -> float:
    """Map a model force to a device intensity in [0, 1].

    With-grain strokes emit the patch's base intensity regardless of force.
    Against-grain forces are normalized linearly so the per-cycle peak lands
    at ``patch.peak_intensity`` and anything above it saturates at 1.
    """
    if force < 0:
        raise InputError("force must be >= 0")
    if mode is StrokeDirection.ALONG_GRAIN:
        return patch.base_intensity
    if mode is StrokeDirection.AGAINST_GRAIN:
        peak = reverse_force_peak(
            patch.hair_length, patch.hand_height, patch.bundle_width, patch.force_scale
        )
        return min(1.0, force / peak) * patch.peak_intensity
    raise InputError("intensity_map is defined for moving strokes only")


def select_frequency(mode: StrokeDirection, previous: float | None = None) -> float:
    """Modulation frequency for a stroke direction.

    HOLD keeps the previous frequency; with no history it falls back to the
    neutral 50 Hz level.
    """
    if mode is StrokeDirection.ALONG_GRAIN:
        return GROWTH_FREQUENCY_HZ
    if mode is StrokeDirection.AGAINST_GRAIN:
        return REVERSE_FREQUENCY_HZ
    return previous if previous is not None else NEUTRAL_FREQUENCY_HZ


@dataclass(frozen=True, eq=False)
class CycleState:
    """Progress through the current against-grain episode.

    ``x`` is the distance traveled against the grain since the episode began
    at ``episode_origin``. It advances only while the hand moves against the
    grain, freezes during holds, and resets when the direction flips.
    """

    x: float = 0.0
    direction: StrokeDirection = StrokeDirection.HOLD
    episode_origin: np.ndarray | None = None
    t: float | None = None

    def __post_init__(self):
        if self.x < 0:
            raise InputError("cycle position x must be >= 0")
        if self.episode_origin is not None:
            origin = np.asarray(self.episode_origin, dtype=np.float64)
            object.__setattr__(self, "episode_origin", origin)


@dataclass(frozen=True, eq=False)
class HapticCommand:
    """One tick of device output: level, modulation frequency, focal center."""

    t: float
    intensity: float
    frequency: float
    focal_center: np.ndarray
    direction: StrokeDirection
    cycle_phase: float

    def __post_init__(self):
        object.__setattr__(
            self, "focal_center", np.asarray(self.focal_center, dtype=np.float64)
        )
        if not 0.0 <= self.intensity <= 1.0:
            raise InputError("intensity must be in [0, 1]")
        if not self.frequency > 0:
            raise InputError("frequency must be positive")
        if not 0.0 <= self.cycle_phase < 1.0:
            raise InputError("cycle_phase must be in [0, 1)")


def tick(
    hand: HandState,
    patch: FurPatch,
    state: CycleState,
    eps: float | None = None,
) -> tuple[HapticCommand, CycleState]:
    """Advance the model by one hand sample.

    Pure state transition: classifies the stroke direction, updates the
    cycle position, evaluates the force model, and maps it to a device
    command centered at the palm. Same inputs always produce the same
    outputs.
    """
    if state.t is not None and hand.t < state.t:
        raise ContractError("hand sample time regressed below the cycle state time")

    cls: Classification = classify_direction(
        hand.velocity,
        patch.grain,
        prev=state.direction,
        eps=DEFAULT_SPEED_EPS if eps is None else eps,
    )
    direction = cls.direction

    if cls.hold:
        new_x = state.x
        origin = state.episode_origin
    elif direction is StrokeDirection.ALONG_GRAIN:
        # A with-grain pass re-lays the fur; any lift cycle in progress is discarded.
        new_x = 0.0
        origin = hand.position
    else:
        if state.direction is not StrokeDirection.AGAINST_GRAIN or state.episode_origin is None:
            origin = hand.position
            new_x = 0.0
        else:
            origin = state.episode_origin
            new_x = max(0.0, -float((hand.position - origin) @ patch.grain))

    period = cycle_period(patch.hair_length, patch.hand_height, patch.bundle_width)
    if direction is StrokeDirection.ALONG_GRAIN:
        intensity = intensity_map(growth_force(patch), patch, StrokeDirection.ALONG_GRAIN)
        phase = 0.0
    elif direction is StrokeDirection.AGAINST_GRAIN:
        intensity = intensity_map(reverse_force(new_x, patch), patch, StrokeDirection.AGAINST_GRAIN)
        phase = math.fmod(new_x, period) / period
    else:
        # Never moved: neutral stimulus at the base level.
        intensity = patch.base_intensity
        phase = 0.0

    command = HapticCommand(
        t=hand.t,
        intensity=intensity,
        frequency=select_frequency(direction),
        focal_center=hand.position,
        direction=direction,
        cycle_phase=phase,
    )
    new_state = CycleState(x=new_x, direction=direction, episode_origin=origin, t=hand.t)
    return command, new_state

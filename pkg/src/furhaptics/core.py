"""Shared domain types, unit conventions, and stroke-direction classification.

Everything is SI: meters, seconds, newtons. Device intensity is a
dimensionless level in [0, 1]. A fur patch carries a unit "grain" vector,
the direction the fur naturally lies; stroking with the grain feels smooth,
stroking against it triggers the lift cycle modeled in
:mod:`furhaptics.force_model`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import InputError, TraceParseError, TrajectoryError

# Below the slowest stroke speed of interest (1.25 cm/s), so a moving hand is
# never misread as stationary.
DEFAULT_SPEED_EPS = 0.005


class StrokeDirection(Enum):
    """Which way the hand moves relative to the fur grain."""

    ALONG_GRAIN = "along_grain"
    AGAINST_GRAIN = "against_grain"
    HOLD = "hold"


class Classification(NamedTuple):
    """Result of a direction classification.

    ``direction`` is the effective stroke direction after retention: while the
    hand is slower than the threshold the previous direction is kept and
    ``hold`` is set. ``direction`` is HOLD only when no motion has ever been
    classified.
    """

    direction: StrokeDirection
    hold: bool


def _as_vec3(value, name: str) -> np.ndarray:
    vec = np.asarray(value, dtype=np.float64)
    if vec.shape != (3,):
        raise InputError(f"{name} must be a 3-vector, got shape {vec.shape}")
    return vec


def classify_direction(
    velocity,
    grain,
    prev: StrokeDirection = StrokeDirection.HOLD,
    eps: float = DEFAULT_SPEED_EPS,
) -> Classification:
    """Classify hand motion as along-grain, against-grain, or a hold.

    The signed speed along the grain, ``velocity . grain``, is compared
    against the threshold ``eps`` (m/s). Between -eps and +eps the previous
    direction is retained with the hold flag set, which prevents chattering
    when the projected speed sits near zero.
    """
    v = _as_vec3(velocity, "velocity")
    g = _as_vec3(grain, "grain")
    if not np.all(np.isfinite(v)):
        raise InputError("velocity must be finite")
    if abs(np.linalg.norm(g) - 1.0) > 1e-6:
        raise InputError("grain must be a unit vector")
    if not eps > 0:
        raise InputError("eps must be positive")

    along_speed = float(v @ g)
    if along_speed > eps:
        return Classification(StrokeDirection.ALONG_GRAIN, False)
    if along_speed < -eps:
        return Classification(StrokeDirection.AGAINST_GRAIN, False)
    return Classification(prev, True)


@dataclass(frozen=True, eq=False)
class HandState:
    """One timestamped hand sample driving the model.

    position and velocity are 3-vectors in meters and meters/second. The
    palm is treated as a single point; its collision proxy lives in
    :mod:`furhaptics.strands`.
    """

    t: float
    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        object.__setattr__(self, "velocity", _as_vec3(self.velocity, "velocity"))
        if not np.isfinite(self.t):
            raise InputError("t must be finite")
        if not np.all(np.isfinite(self.position)):
            raise InputError("position must be finite")
        if not np.all(np.isfinite(self.velocity)):
            raise InputError("velocity must be finite")


@dataclass(frozen=True, eq=False)
class FurPatch:
    """Geometry and material parameters of one rectangular fur patch.

    hair_length, bundle_width and hand_height feed the lift-cycle force
    model. base_intensity is the constant device level emitted for smooth
    (with-grain) strokes; force_scale converts the reverse-stroke force
    expression to newtons and is normally recovered from measured traces by
    :mod:`furhaptics.fitting`.

    The patch rectangle spans ``extent[0]`` meters along the grain and
    ``extent[1]`` meters across it, anchored at ``origin``.
    """

    origin: np.ndarray = (0.0, 0.0, 0.0)
    grain: np.ndarray = (1.0, 0.0, 0.0)
    extent: tuple = (0.25, 0.20)
    hair_length: float = 0.05
    bundle_width: float = 0.03
    hand_height: float = 0.01
    base_intensity: float = 0.6
    force_scale: float = 2e-4
    peak_intensity: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "origin", _as_vec3(self.origin, "origin"))
        g = _as_vec3(self.grain, "grain")
        norm = np.linalg.norm(g)
        if norm < 1e-12:
            raise InputError("grain must be nonzero")
        object.__setattr__(self, "grain", g / norm)
        object.__setattr__(self, "extent", (float(self.extent[0]), float(self.extent[1])))
        if not (self.extent[0] > 0 and self.extent[1] > 0):
            raise InputError("extent must be positive")
        if not self.bundle_width > 0:
            raise InputError("bundle_width must be positive")
        if not 0 < self.hand_height < self.hair_length:
            raise InputError("hand_height must satisfy 0 < h < hair_length")
        if not 0.0 <= self.base_intensity <= 1.0:
            raise InputError("base_intensity must be in [0, 1]")
        if not 0.0 < self.peak_intensity <= 1.0:
            raise InputError("peak_intensity must be in (0, 1]")
        if not self.force_scale > 0:
            raise InputError("force_scale must be positive")
        lat = np.cross(np.array([0.0, 0.0, 1.0]), self.grain)
        norm = np.linalg.norm(lat)
        object.__setattr__(self, "_lateral", lat / norm if norm >= 1e-9 else None)

    def lateral(self) -> np.ndarray:
        """Unit vector across the grain in the horizontal patch plane."""
        if self._lateral is None:
            raise InputError("grain parallel to vertical; patch plane undefined")
        return self._lateral

    def contains(self, point) -> bool:
        """True when ``point`` projects inside the patch rectangle."""
        rel = _as_vec3(point, "point") - self.origin
        u = float(rel @ self.grain)
        w = float(rel @ self.lateral())
        return 0.0 <= u <= self.extent[0] and 0.0 <= w <= self.extent[1]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A raw hand path: strictly increasing times and matching positions."""

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        p = np.asarray(self.positions, dtype=np.float64)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", p)
        if t.ndim != 1 or t.size == 0:
            raise TrajectoryError("empty trajectory")
        if p.shape != (t.size, 3):
            raise TrajectoryError("positions must be (n, 3) matching times")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise TrajectoryError("timestamps must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
            raise TrajectoryError("trajectory contains non-finite values")
        if self.velocities is not None:
            v = np.asarray(self.velocities, dtype=np.float64)
            if v.shape != p.shape:
                raise TrajectoryError("velocities must match positions shape")
            object.__setattr__(self, "velocities", v)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


def central_difference_velocities(times: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Velocities from positions: central differences inside, one-sided at the ends."""
    n = times.size
    v = np.zeros_like(positions)
    if n == 1:
        return v
    v[0] = (positions[1] - positions[0]) / (times[1] - times[0])
    v[-1] = (positions[-1] - positions[-2]) / (times[-1] - times[-2])
    if n > 2:
        dt = (times[2:] - times[:-2])[:, None]
        v[1:-1] = (positions[2:] - positions[:-2]) / dt
    return v


_TRAJECTORY_HEADERS = (
    ["t", "x", "y", "z"],
    ["t", "x", "y", "z", "vx", "vy", "vz"],
)


def load_trajectory(path) -> Trajectory:
    """Read a hand trajectory CSV with header ``t,x,y,z`` (optionally vx,vy,vz).

    Velocities are derived by central differences when the file does not
    provide them.
    """
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TrajectoryError("empty trajectory") from None
        header = [h.strip().lower() for h in header]
        if header not in _TRAJECTORY_HEADERS:
            raise TraceParseError(f"unrecognized trajectory header {header!r}", line=1)
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise TraceParseError(f"expected {width} columns, got {len(row)}", line=lineno)
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise TraceParseError(f"bad number: {exc}", line=lineno) from None
    if not rows:
        raise TrajectoryError("empty trajectory")
    data = np.asarray(rows, dtype=np.float64)
    times = data[:, 0]
    positions = data[:, 1:4]
    velocities = data[:, 4:7] if width == 7 else None
    return Trajectory(times, positions, velocities)


def save_trajectory(path, trajectory: Trajectory) -> None:
    """Write a trajectory as ``t,x,y,z`` CSV (shortest round-trip floats)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x,y,z\n")
        for t, p in zip(trajectory.times, trajectory.positions):
            fh.write(f"{float(t)!r},{float(p[0])!r},{float(p[1])!r},{float(p[2])!r}\n")


def hand_states(trajectory: Trajectory) -> list:
    """Expand a trajectory into HandState samples, deriving velocities if needed."""
    vels = trajectory.velocities
    if vels is None:
        vels = central_difference_velocities(trajectory.times, trajectory.positions)
    return [
        HandState(float(t), p, v)
        for t, p, v in zip(trajectory.times, trajectory.positions, vels)
    ]

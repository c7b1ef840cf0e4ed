"""Spatiotemporal modulation: expand tick commands into device-rate focal samples.

A single ultrasound focal point is swept around a circle (default
circumference 0.20 m) fast enough to be perceived as an area stimulus; the
commanded frequency is the number of revolutions per second. Samples are
synthesized on a global uniform clock at ``emission_rate`` so consecutive
samples stay evenly spaced across command boundaries, and the angular phase
is threaded from one command to the next so the focal point never jumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError
from .force_model import HapticCommand

DEFAULT_CIRCUMFERENCE = 0.20
DEFAULT_EMISSION_RATE = 16_000.0

# Absolute slack on the sample-index grid; keeps boundary samples owned by
# exactly one command despite float rounding in t * rate.
_INDEX_TOL = 1e-9


def circle_radius(circumference: float) -> float:
    """Radius of the modulation circle: C / (2 pi)."""
    if not circumference > 0:
        raise InputError("circumference must be positive")
    return circumference / (2.0 * math.pi)


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis (e1, e2) of the plane normal to ``normal``."""
    n = np.asarray(normal, dtype=np.float64)
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise InputError("plane normal must be nonzero")
    n = n / norm
    if abs(n[2]) > 0.999999:
        e1 = np.array([1.0, 0.0, 0.0])
    else:
        e1 = np.cross(np.array([0.0, 0.0, 1.0]), n)
        e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


@dataclass(frozen=True, eq=False)
class StmConfig:
    """Modulation-circle geometry and the device emission clock."""

    circumference: float = DEFAULT_CIRCUMFERENCE
    emission_rate: float = DEFAULT_EMISSION_RATE
    plane_normal: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not self.circumference > 0:
            raise ConfigError("circumference must be positive")
        if not self.emission_rate > 0:
            raise ConfigError("emission_rate must be positive")
        object.__setattr__(
            self, "plane_normal", np.asarray(self.plane_normal, dtype=np.float64)
        )
        object.__setattr__(self, "_basis", plane_basis(self.plane_normal))

    @property
    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        return self._basis


@dataclass(frozen=True, eq=False)
class FocalSample:
    """One device-rate emission: timestamp, focal point, intensity."""

    t: float
    point: np.ndarray
    intensity: float

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64))
        if not 0.0 <= self.intensity <= 1.0:
            raise InputError("intensity must be in [0, 1]")


def emit(
    cmd: HapticCommand,
    next_cmd_t: float,
    cfg: StmConfig,
    phase_in: float = 0.0,
) -> tuple[list[FocalSample], float]:
    """Synthesize focal samples for one command interval [cmd.t, next_cmd_t).

    Samples land on the global grid t = k / emission_rate. The focal point
    moves on the circle of radius C/(2 pi) around the command's focal center
    at angular rate 2 pi f, starting from ``phase_in`` at cmd.t. Returns the
    samples and the phase at next_cmd_t for the following command.
    """
    if not next_cmd_t > cmd.t:
        raise InputError("next_cmd_t must be greater than cmd.t")
    if cfg.emission_rate <= 2.0 * cmd.frequency:
        raise ConfigError(
            f"emission_rate {cfg.emission_rate} must exceed twice the "
            f"modulation frequency {cmd.frequency}"
        )

    rate = cfg.emission_rate
    k_start = math.ceil(cmd.t * rate - _INDEX_TOL)
    k_end = math.ceil(next_cmd_t * rate - _INDEX_TOL)
    omega = 2.0 * math.pi * cmd.frequency
    phase_out = math.fmod(phase_in + omega * (next_cmd_t - cmd.t), 2.0 * math.pi)

    if k_end <= k_start:
        return [], phase_out

    radius = circle_radius(cfg.circumference)
    e1, e2 = cfg.basis
    times = np.arange(k_start, k_end, dtype=np.float64) / rate
    phases = phase_in + omega * (times - cmd.t)
    points = (
        cmd.focal_center[None, :]
        + radius * np.cos(phases)[:, None] * e1[None, :]
        + radius * np.sin(phases)[:, None] * e2[None, :]
    )
    samples = [
        FocalSample(float(t), p, cmd.intensity) for t, p in zip(times, points)
    ]
    return samples, phase_out


def emit_trace(
    commands,
    cfg: StmConfig,
    end_t: float,
    phase_in: float = 0.0,
) -> tuple[list[FocalSample], float]:
    """Expand an ordered command list into one continuous focal-sample tape.

    ``end_t`` closes the final command's interval. An empty command list
    yields no samples and leaves the phase untouched.
    """
    commands = list(commands)
    if not commands:
        return [], phase_in
    samples: list[FocalSample] = []
    phase = phase_in
    for cmd, nxt in zip(commands, commands[1:]):
        chunk, phase = emit(cmd, nxt.t, cfg, phase)
        samples.extend(chunk)
    chunk, phase = emit(commands[-1], end_t, cfg, phase)
    samples.extend(chunk)
    return samples, phase


def write_focal_csv(path, samples) -> None:
    """Write the device tape as ``t,x,y,z,intensity`` CSV."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x,y,z,intensity\n")
        for s in samples:
            x, y, z = (float(c) for c in s.point)
            fh.write(f"{float(s.t)!r},{x!r},{y!r},{z!r},{float(s.intensity)!r}\n")

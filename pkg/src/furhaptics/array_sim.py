"""Simulated phased ultrasound array: focusing phases and pressure fields.

Stand-in for a 256-transducer hardware array so focal commands can be
verified without a device. Transducers are omnidirectional point sources in
single-frequency steady state; focusing uses time-reversal phases

    phi_i = -(2 pi / lambda) * |focus - p_i|   (mod 2 pi)

and the field is the spherically spreading coherent sum

    p(r) = sum_i a_i / d_i * exp(j (phi_i + 2 pi d_i / lambda)).

At the solved focus all terms align, so |p| = sum a_i / d_i there. Because
of the 1/d weighting the on-axis magnitude peaks slightly nearer the array
than the geometric focus (the usual focal shift); within the transverse
focal plane the solved focus is the maximum.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistanceError, InputError
from .stm import plane_basis

DEFAULT_CARRIER_HZ = 40_000.0
DEFAULT_SOUND_SPEED = 343.0
_MIN_DISTANCE = 1e-9

# Reference-hardware calibration, carried as export metadata only: a drive
# intensity of 1.0 delivers 10 mN on a 2.1 cm circular target.
FULL_SCALE_FORCE_N = 0.010
CALIBRATION_TARGET_DIAMETER_M = 0.021


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Transducer positions plus carrier frequency and sound speed."""

    positions: np.ndarray
    carrier_frequency: float = DEFAULT_CARRIER_HZ
    sound_speed: float = DEFAULT_SOUND_SPEED

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise InputError("positions must be an (n, 3) array with n >= 1")
        object.__setattr__(self, "positions", pos)
        if not self.carrier_frequency > 0 or not self.sound_speed > 0:
            raise InputError("carrier_frequency and sound_speed must be positive")

    @property
    def wavelength(self) -> float:
        return self.sound_speed / self.carrier_frequency

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @classmethod
    def grid(
        cls,
        n: int = 16,
        pitch: float = 0.01,
        carrier_frequency: float = DEFAULT_CARRIER_HZ,
        sound_speed: float = DEFAULT_SOUND_SPEED,
    ) -> "ArrayGeometry":
        """Square n x n grid centered on the origin in the z = 0 plane."""
        idx = (np.arange(n) - (n - 1) / 2.0) * pitch
        gx, gy = np.meshgrid(idx, idx, indexing="ij")
        pos = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(n * n)])
        return cls(pos, carrier_frequency, sound_speed)

    def content_hash(self) -> str:
        """Stable hash of the geometry for export metadata."""
        digest = hashlib.sha256()
        digest.update(self.positions.tobytes())
        digest.update(repr(self.carrier_frequency).encode())
        digest.update(repr(self.sound_speed).encode())
        return digest.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class PhaseSolution:
    """Per-transducer drive: phase in [0, 2 pi) and amplitude in [0, 1]."""

    phases: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        ph = np.asarray(self.phases, dtype=np.float64)
        am = np.asarray(self.amplitudes, dtype=np.float64)
        if ph.shape != am.shape or ph.ndim != 1:
            raise InputError("phases and amplitudes must be 1-D arrays of equal length")
        if np.any(am < 0) or np.any(am > 1):
            raise InputError("amplitudes must be in [0, 1]")
        object.__setattr__(self, "phases", np.mod(ph, 2.0 * np.pi))
        object.__setattr__(self, "amplitudes", am)


def _distances(geometry: ArrayGeometry, point: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(point[None, :] - geometry.positions, axis=1)
    if np.any(d < _MIN_DISTANCE):
        raise DegenerateDistanceError("point coincides with a transducer")
    return d


def solve_focus(geometry: ArrayGeometry, focus, amplitude: float = 1.0) -> PhaseSolution:
    """Time-reversal phases that align every transducer's arrival at ``focus``.

    Intensity in [0, 1] maps linearly to a uniform element amplitude.
    """
    if not 0.0 <= amplitude <= 1.0:
        raise InputError("amplitude must be in [0, 1]")
    focus = np.asarray(focus, dtype=np.float64)
    d = _distances(geometry, focus)
    k = 2.0 * math.pi / geometry.wavelength
    phases = np.mod(-k * d, 2.0 * math.pi)
    return PhaseSolution(phases, np.full(geometry.count, float(amplitude)))


def pressure_at(geometry: ArrayGeometry, solution: PhaseSolution, point) -> complex:
    """Coherent complex pressure (arbitrary units) at one field point."""
    point = np.asarray(point, dtype=np.float64)
    d = _distances(geometry, point)
    k = 2.0 * math.pi / geometry.wavelength
    terms = solution.amplitudes / d * np.exp(1j * (solution.phases + k * d))
    return complex(np.sum(terms))


def field_grid(
    geometry: ArrayGeometry,
    solution: PhaseSolution,
    center,
    normal=(0.0, 0.0, 1.0),
    half_extent: float = 0.02,
    shape: tuple = (41, 41),
) -> np.ndarray:
    """Pressure magnitudes on a plane through ``center`` normal to ``normal``.

    Row-major (shape[0], shape[1]) grid spanning +-half_extent along the two
    in-plane basis axes. Each cell is evaluated with the same kernel as
    ``pressure_at`` so values are pointwise identical.
    """
    nu, nv = int(shape[0]), int(shape[1])
    if nu < 2 or nv < 2:
        raise InputError("grid resolution must be at least 2 x 2")
    center = np.asarray(center, dtype=np.float64)
    e1, e2 = plane_basis(normal)
    us = np.linspace(-half_extent, half_extent, nu)
    vs = np.linspace(-half_extent, half_extent, nv)
    out = np.empty((nu, nv), dtype=np.float64)
    for i, u in enumerate(us):
        for j, v in enumerate(vs):
            out[i, j] = abs(pressure_at(geometry, solution, center + u * e1 + v * e2))
    return out


def write_field_grid(
    path,
    grid: np.ndarray,
    geometry: ArrayGeometry,
    focus,
    pgm_path=None,
) -> None:
    """Export a field grid as CSV plus a key=value metadata sidecar.

    Optionally also writes an 8-bit ASCII portable graymap for quick viewing.
    """
    path = str(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in grid:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")
    focus = np.asarray(focus, dtype=np.float64)
    with open(path + ".meta", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"geometry_hash={geometry.content_hash()}\n")
        fh.write(f"transducers={geometry.count}\n")
        fh.write(f"wavelength={geometry.wavelength!r}\n")
        fh.write(f"focus={float(focus[0])!r},{float(focus[1])!r},{float(focus[2])!r}\n")
        fh.write(f"rows={grid.shape[0]}\n")
        fh.write(f"cols={grid.shape[1]}\n")
        fh.write(f"full_scale_force_n={FULL_SCALE_FORCE_N!r}\n")
        fh.write(f"calibration_target_diameter_m={CALIBRATION_TARGET_DIAMETER_M!r}\n")
    if pgm_path is not None:
        peak = float(np.max(grid))
        scale = 255.0 / peak if peak > 0 else 0.0
        levels = np.clip(np.rint(grid * scale), 0, 255).astype(int)
        with open(pgm_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"P2\n{grid.shape[1]} {grid.shape[0]}\n255\n")
            for row in levels:
                fh.write(" ".join(str(v) for v in row))
                fh.write("\n")

"""Session orchestration: trajectory in, command/focal/strand traces out.

A session resamples the hand trajectory to the tick rate, runs the force
model per tick, gates intensity to zero whenever the hand is outside the
fur patch rectangle, expands commands into the device-rate focal tape, and
optionally drives the strand simulation and an acoustic focus verification.
Given the same inputs, configuration, and seed, every output file is
byte-identical between runs.

The config file is plain ``section.key = value`` text; see
``SessionConfig.from_file``. File formats: commands and strand frames are
line-delimited JSON, the focal tape is CSV, the report is key=value lines.
All floats print in their shortest round-trip form.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .array_sim import ArrayGeometry, field_grid, solve_focus
from .core import (
    DEFAULT_SPEED_EPS,
    FurPatch,
    HandState,
    Trajectory,
    central_difference_velocities,
)
from .errors import ConfigError, InputError, OutputError, TrajectoryError
from .force_model import CycleState, HapticCommand, tick
from .stm import StmConfig, emit_trace, write_focal_csv
from .strands import (
    DEFAULT_DT,
    HandCollider,
    StrandParams,
    grid_strands,
    write_frames_jsonl,
)

OUTPUT_DIR_ENV = "FURHAPTICS_OUTPUT_DIR"

DEFAULT_TICK_RATE = 90.0


@dataclass(eq=False)
class CommandTrace:
    """Ordered per-tick command records with strictly increasing timestamps."""

    records: list

    def __post_init__(self):
        ts = [cmd.t for cmd in self.records]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InputError("command timestamps must be strictly increasing")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass(eq=False)
class SessionConfig:
    """Everything a session needs besides the trajectory itself."""

    patch: FurPatch = field(default_factory=FurPatch)
    stm: StmConfig = field(default_factory=StmConfig)
    strand: StrandParams = field(default_factory=StrandParams)
    tick_rate: float = DEFAULT_TICK_RATE
    direction_eps: float = DEFAULT_SPEED_EPS
    hand_radius: float = 0.04
    strands_enabled: bool = False
    strand_grid: tuple = (40, 40)
    strand_dt: float = DEFAULT_DT
    acoustic_verify: bool = False
    acoustic_checks: int = 3
    seed: int = 0
    out_dir: Path | None = None

    def __post_init__(self):
        if not self.tick_rate > 0:
            raise ConfigError("tick_rate must be positive")
        if not self.direction_eps > 0:
            raise ConfigError("direction_eps must be positive")
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)

    @classmethod
    def from_file(cls, path) -> "SessionConfig":
        """Parse a ``section.key = value`` config file.

        Unknown keys are rejected. Vectors are comma-separated triples,
        booleans are on/off or true/false.
        """
        entries = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, value = (part.strip() for part in line.split("=", 1))
                entries[key.lower()] = value
        return cls.from_entries(entries)

    @classmethod
    def from_entries(cls, entries: dict) -> "SessionConfig":
        def take(key, default=None):
            return entries.pop(key, default)

        def as_float(key, default):
            value = take(key)
            return default if value is None else float(value)

        def as_int(key, default):
            value = take(key)
            return default if value is None else int(value)

        def as_bool(key, default):
            value = take(key)
            if value is None:
                return default
            lowered = value.strip().lower()
            if lowered in ("on", "true", "1", "yes"):
                return True
            if lowered in ("off", "false", "0", "no"):
                return False
            raise ConfigError(f"{key}: expected on/off, got {value!r}")

        def as_vec(key, default):
            value = take(key)
            if value is None:
                return default
            parts = [float(p) for p in value.split(",")]
            if len(parts) != len(default):
                raise ConfigError(f"{key}: expected {len(default)} components")
            return tuple(parts)

        patch = FurPatch(
            origin=as_vec("patch.origin", (0.0, 0.0, 0.0)),
            grain=as_vec("patch.grain", (1.0, 0.0, 0.0)),
            extent=as_vec("patch.extent", (0.25, 0.20)),
            hair_length=as_float("patch.hair_length", 0.05),
            bundle_width=as_float("patch.bundle_width", 0.03),
            hand_height=as_float("patch.hand_height", 0.01),
            base_intensity=as_float("patch.base_intensity", 0.6),
            force_scale=as_float("patch.force_scale", 2e-4),
            peak_intensity=as_float("patch.peak_intensity", 1.0),
        )
        stm = StmConfig(
            circumference=as_float("stm.circumference", 0.20),
            emission_rate=as_float("stm.emission_rate", 16_000.0),
            plane_normal=as_vec("stm.plane_normal", (0.0, 0.0, 1.0)),
        )
        strand = StrandParams(
            segments=as_int("strand.segments", 10),
            stiffness=as_float("strand.stiffness", 400.0),
            damping=as_float("strand.damping", 40.0),
            recovery_time=as_float("strand.recovery_time", 1.0),
            gravity=as_float("strand.gravity", 9.81),
            grain=patch.grain,
            lie_angle=as_float("strand.lie_angle", math.radians(25.0)),
            stand_blend=as_float("strand.stand_blend", 0.5),
        )
        grid_nx = as_int("strand.grid_nx", 40)
        grid_ny = as_int("strand.grid_ny", 40)
        out_dir = take("session.out_dir")
        config = cls(
            patch=patch,
            stm=stm,
            strand=strand,
            tick_rate=as_float("session.tick_rate", DEFAULT_TICK_RATE),
            direction_eps=as_float("session.direction_eps", DEFAULT_SPEED_EPS),
            hand_radius=as_float("session.hand_radius", 0.04),
            strands_enabled=as_bool("session.strands", False),
            strand_grid=(grid_nx, grid_ny),
            strand_dt=as_float("strand.dt", DEFAULT_DT),
            acoustic_verify=as_bool("session.acoustic_verify", False),
            acoustic_checks=as_int("session.acoustic_checks", 3),
            seed=as_int("session.seed", 0),
            out_dir=Path(out_dir) if out_dir else None,
        )
        if entries:
            unknown = ", ".join(sorted(entries))
            raise ConfigError(f"unknown config keys: {unknown}")
        return config


@dataclass(eq=False)
class SessionResult:
    """In-memory session outputs plus the paths of any files written."""

    commands: CommandTrace
    focal_samples: list
    report: dict
    strand_frames: list | None = None
    paths: dict = field(default_factory=dict)


def resample_trajectory(trajectory: Trajectory, tick_rate: float):
    """Uniform tick grid over the trajectory with interpolated positions.

    Velocities are interpolated when the trajectory provides them and
    derived by central differences on the resampled grid otherwise.
    """
    t0 = float(trajectory.times[0])
    t1 = float(trajectory.times[-1])
    ticks = int(math.floor((t1 - t0) * tick_rate + 1e-9)) + 1
    times = t0 + np.arange(ticks) / tick_rate
    positions = np.column_stack(
        [np.interp(times, trajectory.times, trajectory.positions[:, axis]) for axis in range(3)]
    )
    if trajectory.velocities is not None:
        velocities = np.column_stack(
            [np.interp(times, trajectory.times, trajectory.velocities[:, axis]) for axis in range(3)]
        )
    else:
        velocities = central_difference_velocities(times, positions)
    return times, positions, velocities


def run_session(config: SessionConfig, trajectory: Trajectory) -> SessionResult:
    """Run the full pipeline for one hand trajectory.

    Writes commands.jsonl, focal.csv, report.txt (and strands.jsonl when the
    strand simulation is enabled) under ``config.out_dir`` if set. The
    ``FURHAPTICS_OUTPUT_DIR`` environment variable overrides the output
    directory and nothing else.
    """
    if trajectory.times.size == 0:
        raise TrajectoryError("empty trajectory")

    times, positions, velocities = resample_trajectory(trajectory, config.tick_rate)

    commands = []
    state = CycleState()
    gated_ticks = 0
    for t, pos, vel in zip(times, positions, velocities):
        hand = HandState(float(t), pos, vel)
        command, state = tick(hand, config.patch, state, eps=config.direction_eps)
        if not config.patch.contains(pos):
            gated_ticks += 1
            command = HapticCommand(
                t=command.t,
                intensity=0.0,
                frequency=command.frequency,
                focal_center=command.focal_center,
                direction=command.direction,
                cycle_phase=command.cycle_phase,
            )
        commands.append(command)

    trace = CommandTrace(commands)
    end_t = float(times[-1]) + 1.0 / config.tick_rate
    samples, final_phase = emit_trace(trace, config.stm, end_t)

    report = {
        "session.tick_rate": config.tick_rate,
        "session.seed": config.seed,
        "session.ticks": len(trace),
        "session.gated_ticks": gated_ticks,
        "session.duration": float(times[-1] - times[0]),
        "stm.samples": len(samples),
        "stm.final_phase": final_phase,
        "patch.hair_length": config.patch.hair_length,
        "patch.bundle_width": config.patch.bundle_width,
        "patch.hand_height": config.patch.hand_height,
        "patch.base_intensity": config.patch.base_intensity,
        "patch.force_scale": config.patch.force_scale,
    }

    strand_frames = None
    if config.strands_enabled:
        strand_frames = _run_strands(config, times, positions, velocities)
        report["strands.count"] = strand_frames[0][1].shape[0] if strand_frames else 0
        report["strands.frames"] = len(strand_frames)
        if strand_frames:
            _, last_nodes, last_standing = strand_frames[-1]
            report["strands.standing"] = int(last_standing.sum())

    if config.acoustic_verify:
        report.update(_verify_focus(samples, config))

    result = SessionResult(
        commands=trace,
        focal_samples=samples,
        report=report,
        strand_frames=strand_frames,
    )

    out_dir = os.environ.get(OUTPUT_DIR_ENV) or config.out_dir
    if out_dir is not None:
        result.paths = _write_outputs(Path(out_dir), result, config)
    return result


def _run_strands(config: SessionConfig, times, positions, velocities):
    """Drive the strand patch at its own substep rate, one frame per tick."""
    substeps = max(1, round(1.0 / (config.strand_dt * config.tick_rate)))
    dt = 1.0 / (config.tick_rate * substeps)
    patch = grid_strands(
        config.patch.origin,
        config.patch.grain,
        config.patch.extent,
        config.strand,
        config.patch.hair_length,
        nx=config.strand_grid[0],
        ny=config.strand_grid[1],
    )
    frames = []
    for index in range(times.size):
        pos = positions[index]
        vel = velocities[index]
        nxt = positions[index + 1] if index + 1 < times.size else positions[index]
        for sub in range(substeps):
            frac = sub / substeps
            center = pos + frac * (nxt - pos)
            hand = HandCollider(center=center + np.array([0.0, 0.0, config.hand_radius]), radius=config.hand_radius, velocity=vel)
            patch.step(hand, dt)
        frames.append((index, patch.nodes.copy(), patch.standing.copy()))
    return frames


def _verify_focus(samples, config: SessionConfig) -> dict:
    """Solve focusing for a few samples and confirm the field peaks there.

    The simulated array sits in the z = 0 plane under the center of the fur
    patch, mirroring a device mounted beneath the stroked region. Foci
    steered far off the array axis may legitimately fail the centered-peak
    check (grating lobes); the report carries the per-sample tally.
    """
    if not samples:
        return {"acoustic.checked": 0}
    patch_center = (
        config.patch.origin
        + 0.5 * config.patch.extent[0] * config.patch.grain
        + 0.5 * config.patch.extent[1] * config.patch.lateral()
    )
    offset = np.array([patch_center[0], patch_center[1], 0.0])
    geometry = ArrayGeometry.grid()
    geometry = ArrayGeometry(
        geometry.positions + offset, geometry.carrier_frequency, geometry.sound_speed
    )
    count = min(config.acoustic_checks, len(samples))
    indices = np.linspace(0, len(samples) - 1, count).astype(int)
    checked = 0
    centered = 0
    for index in indices:
        sample = samples[int(index)]
        if sample.point[2] <= 0.02:
            continue
        solution = solve_focus(geometry, sample.point, amplitude=max(sample.intensity, 0.1))
        grid = field_grid(geometry, solution, sample.point, half_extent=0.01, shape=(21, 21))
        peak = np.unravel_index(int(np.argmax(grid)), grid.shape)
        center = ((grid.shape[0] - 1) // 2, (grid.shape[1] - 1) // 2)
        if abs(peak[0] - center[0]) <= 1 and abs(peak[1] - center[1]) <= 1:
            centered += 1
        checked += 1
    return {
        "acoustic.checked": checked,
        "acoustic.centered": centered,
        "acoustic.peak_centered": centered == checked,
    }


def command_record(command: HapticCommand) -> dict:
    return {
        "t": float(command.t),
        "intensity": float(command.intensity),
        "frequency": float(command.frequency),
        "focal": [float(c) for c in command.focal_center],
        "direction": command.direction.value,
        "cycle_phase": float(command.cycle_phase),
    }


def write_commands_jsonl(path, trace: CommandTrace) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for command in trace:
            fh.write(json.dumps(command_record(command)))
            fh.write("\n")


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in report.items():
            if isinstance(value, float):
                fh.write(f"{key}={value!r}\n")
            else:
                fh.write(f"{key}={value}\n")


def _write_outputs(out_dir: Path, result: SessionResult, config: SessionConfig) -> dict:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out_dir}: {exc}") from exc
    paths = {
        "commands": out_dir / "commands.jsonl",
        "focal": out_dir / "focal.csv",
        "report": out_dir / "report.txt",
    }
    try:
        write_commands_jsonl(paths["commands"], result.commands)
        write_focal_csv(paths["focal"], result.focal_samples)
        if result.strand_frames is not None:
            paths["strands"] = out_dir / "strands.jsonl"
            write_frames_jsonl(paths["strands"], result.strand_frames)
        write_report(paths["report"], result.report)
    except OSError as exc:
        raise OutputError(f"failed writing session outputs: {exc}") from exc
    return paths

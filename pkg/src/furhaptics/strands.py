"""Fur strands as constrained polylines reacting to a moving hand collider.

Each strand is a chain of equal-length segments rooted in the patch plane.
A step is: semi-implicit integration of a spring toward the current rest
pose with velocity damping, penetration resolution against the hand sphere,
then a root-to-tip pass that restores every segment length exactly while
keeping nodes outside the sphere. The root never moves.

The two stroke regimes the model reproduces:

* with the grain, strands are pressed down and spring back to their
  original pose after the hand passes;
* against the grain, strands are lifted and, when the hand releases them,
  their rest pose is overwritten with the release shape reoriented toward
  vertical-plus-reverse-grain, so they stay standing. A later with-grain
  pass re-lays them to the original pose.

Strands never interact with each other; a patch step is the independent
per-strand step, so results do not depend on evaluation order. The
integration is fixed-step and fully deterministic.

Stability: the semi-implicit spring is stable for dt < 2/sqrt(stiffness)
and the explicit damping term for dt < 2/damping; ``StrandParams.dt_max``
applies a 4x margin to both. The default 1/360 s step sits well inside it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, InputError

DEFAULT_DT = 1.0 / 360.0

# Velocity correction factor for the root-to-tip constraint pass; bleeds off
# the energy the pass would otherwise inject.
_FTL_DAMPING = 0.9

_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class StrandParams:
    """Material and simulation parameters shared by all strands of a patch.

    ``recovery_time`` is a contract: stiffness and damping must be strong
    enough that a disturbed strand settles back to its rest pose within it
    (checked at construction). ``grain`` is the fur growth direction, used
    to classify the stroke direction of each contact episode. ``gravity``
    is the body-force magnitude statically folded into the rest pose (the
    authored pose is the equilibrium), so a resting strand stays put.
    """

    segments: int = 10
    stiffness: float = 400.0
    damping: float = 40.0
    recovery_time: float = 1.0
    gravity: float = 9.81
    grain: np.ndarray = (1.0, 0.0, 0.0)
    lie_angle: float = math.radians(25.0)
    stand_blend: float = 0.5

    def __post_init__(self):
        if self.segments < 1:
            raise ConfigError("segments must be >= 1")
        for name in ("stiffness", "damping", "recovery_time", "gravity"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 < self.stand_blend <= 1.0:
            raise ConfigError("stand_blend must be in (0, 1]")
        g = np.asarray(self.grain, dtype=np.float64)
        norm = np.linalg.norm(g)
        if norm < 1e-12:
            raise ConfigError("grain must be nonzero")
        object.__setattr__(self, "grain", g / norm)
        # Slowest decay rate of the damped spring; must settle within recovery_time.
        half_c = 0.5 * self.damping
        disc = half_c * half_c - self.stiffness
        rate = half_c - math.sqrt(disc) if disc > 0 else half_c
        if rate * self.recovery_time < 5.0:
            raise ConfigError(
                "stiffness/damping too weak to recover within recovery_time"
            )

    @property
    def dt_max(self) -> float:
        return min(0.5 / math.sqrt(self.stiffness), 0.5 / self.damping)


@dataclass(frozen=True, eq=False)
class HandCollider:
    """Sphere approximating the palm underside."""

    center: np.ndarray
    radius: float = 0.04
    velocity: np.ndarray = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=np.float64))
        if not self.radius > 0:
            raise InputError("radius must be positive")


@dataclass(frozen=True, eq=False)
class StrandState:
    """One strand: fixed root, segments+1 nodes, and release bookkeeping.

    ``rest_directions`` is the current rest pose as per-segment unit
    vectors; ``original_rest_directions`` keeps the authored pose so a
    with-grain release can restore it. ``episode_sweep`` accumulates the
    hand's grain-projected travel while in contact and decides the stroke
    direction of the episode at release time.
    """

    root: np.ndarray
    nodes: np.ndarray
    velocities: np.ndarray
    rest_directions: np.ndarray
    original_rest_directions: np.ndarray
    segment_length: float
    released_standing: bool = False
    in_contact: bool = False
    episode_sweep: float = 0.0

    def __post_init__(self):
        for name in ("root", "nodes", "velocities", "rest_directions", "original_rest_directions"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        n = self.rest_directions.shape[0]
        if self.nodes.shape != (n + 1, 3):
            raise InputError("nodes must have one more row than rest_directions")
        if self.velocities.shape != self.nodes.shape:
            raise InputError("velocities must match nodes shape")
        if not self.segment_length > 0:
            raise InputError("segment_length must be positive")

    @property
    def tip(self) -> np.ndarray:
        return self.nodes[-1]


def rest_pose_nodes(root, rest_directions, segment_length: float) -> np.ndarray:
    """Node positions obtained by chaining rest directions from the root."""
    root = np.asarray(root, dtype=np.float64)
    dirs = np.asarray(rest_directions, dtype=np.float64)
    free = root[None, :] + segment_length * np.cumsum(dirs, axis=0)
    return np.vstack([root[None, :], free])


def new_strand(root, params: StrandParams, hair_length: float) -> StrandState:
    """A strand at rest, lying along the grain raised by the lie angle."""
    lie = (
        math.cos(params.lie_angle) * params.grain + math.sin(params.lie_angle) * _UP
    )
    lie = lie / np.linalg.norm(lie)
    dirs = np.tile(lie, (params.segments, 1))
    seg = hair_length / params.segments
    nodes = rest_pose_nodes(root, dirs, seg)
    return StrandState(
        root=np.asarray(root, dtype=np.float64),
        nodes=nodes,
        velocities=np.zeros_like(nodes),
        rest_directions=dirs,
        original_rest_directions=dirs.copy(),
        segment_length=seg,
    )


class StrandPatch:
    """Vectorized container for a whole grid of strands.

    Holds stacked (strands, nodes, 3) arrays and advances every strand in
    one numpy pass; ``step``/``patch_step`` on individual ``StrandState``
    values run through the same kernel, so per-strand results are identical
    either way. Stepping mutates the container in place.
    """

    def __init__(self, states, params: StrandParams):
        states = list(states)
        if not states:
            raise InputError("at least one strand required")
        self.params = params
        self.roots = np.stack([s.root for s in states])
        self.nodes = np.stack([s.nodes for s in states])
        self.velocities = np.stack([s.velocities for s in states])
        self.rest_directions = np.stack([s.rest_directions for s in states])
        self.original_rest_directions = np.stack([s.original_rest_directions for s in states])
        self.segment_lengths = np.array([s.segment_length for s in states])
        self.standing = np.array([s.released_standing for s in states], dtype=bool)
        self.in_contact = np.array([s.in_contact for s in states], dtype=bool)
        self.episode_sweep = np.array([s.episode_sweep for s in states])

    @property
    def count(self) -> int:
        return self.nodes.shape[0]

    @property
    def segments(self) -> int:
        return self.rest_directions.shape[1]

    def to_states(self) -> list[StrandState]:
        return [
            StrandState(
                root=self.roots[i].copy(),
                nodes=self.nodes[i].copy(),
                velocities=self.velocities[i].copy(),
                rest_directions=self.rest_directions[i].copy(),
                original_rest_directions=self.original_rest_directions[i].copy(),
                segment_length=float(self.segment_lengths[i]),
                released_standing=bool(self.standing[i]),
                in_contact=bool(self.in_contact[i]),
                episode_sweep=float(self.episode_sweep[i]),
            )
            for i in range(self.count)
        ]

    def rest_targets(self) -> np.ndarray:
        seg = self.segment_lengths[:, None, None]
        return self.roots[:, None, :] + seg * np.cumsum(self.rest_directions, axis=1)

    def step(self, hand: HandCollider, dt: float = DEFAULT_DT) -> None:
        """Advance every strand by dt, handling contact releases."""
        params = self.params
        if not 0.0 < dt <= params.dt_max:
            raise ConfigError(f"dt must be in (0, {params.dt_max!r}]")

        n_seg = self.segments
        seg = self.segment_lengths
        old_nodes = self.nodes
        free = old_nodes[:, 1:, :]

        accel = params.stiffness * (self.rest_targets() - free) - params.damping * self.velocities[:, 1:, :]
        v_pred = self.velocities[:, 1:, :] + dt * accel
        p_pred = free + dt * v_pred

        # Contact and first-pass penetration resolution on the predictions.
        offset = p_pred - hand.center
        dist = np.linalg.norm(offset, axis=2)
        inside = dist < hand.radius
        contact = inside.any(axis=1)
        safe = np.where(dist > 1e-12, dist, 1.0)
        surface = hand.center + offset / safe[..., None] * hand.radius
        p_pred = np.where(inside[..., None], surface, p_pred)

        new_nodes = np.empty_like(old_nodes)
        new_nodes[:, 0, :] = self.roots
        for i in range(1, n_seg + 1):
            parent = new_nodes[:, i - 1, :]
            toward = p_pred[:, i - 1, :] - parent
            norm = np.linalg.norm(toward, axis=1)
            degenerate = norm < 1e-12
            toward = np.where(degenerate[:, None], self.rest_directions[:, i - 1, :], toward)
            norm = np.where(degenerate, 1.0, norm)
            candidate = parent + seg[:, None] * toward / norm[:, None]
            new_nodes[:, i, :] = _project_segment_tip(candidate, parent, seg, hand)

        new_vel = (new_nodes - old_nodes) / dt
        # Constraint-pass velocity correction: node i absorbs part of the
        # correction applied to node i+1.
        if n_seg > 1:
            corrections = new_nodes[:, 1:, :] - p_pred
            new_vel[:, 1:n_seg, :] -= _FTL_DAMPING * corrections[:, 1:, :] / dt
        new_vel[:, 0, :] = 0.0

        self.nodes = new_nodes
        self.velocities = new_vel

        sweep_rate = float(hand.velocity @ params.grain)
        self.episode_sweep = np.where(
            contact, self.episode_sweep + sweep_rate * dt, self.episode_sweep
        )
        released = self.in_contact & ~contact
        if released.any():
            self._apply_release(released, sweep_rate)
        self.in_contact = contact

    def _apply_release(self, released: np.ndarray, hand_sweep_rate: float) -> None:
        sweep = self.episode_sweep
        against = np.where(sweep != 0.0, sweep < 0.0, hand_sweep_rate < 0.0)
        stand_mask = released & against
        relay_mask = released & ~against

        if stand_mask.any():
            stand_dir = _UP - self.params.grain
            stand_dir = stand_dir / np.linalg.norm(stand_dir)
            shape = np.diff(self.nodes, axis=1) / self.segment_lengths[:, None, None]
            w = self.params.stand_blend
            blended = (1.0 - w) * shape + w * stand_dir[None, None, :]
            norms = np.linalg.norm(blended, axis=2, keepdims=True)
            blended = np.where(norms > 1e-12, blended / np.where(norms > 1e-12, norms, 1.0), stand_dir)
            self.rest_directions = np.where(stand_mask[:, None, None], blended, self.rest_directions)
            self.standing = self.standing | stand_mask
        if relay_mask.any():
            self.rest_directions = np.where(
                relay_mask[:, None, None], self.original_rest_directions, self.rest_directions
            )
            self.standing = self.standing & ~relay_mask
        self.episode_sweep = np.where(released, 0.0, self.episode_sweep)

    def segment_deviation(self) -> float:
        """Largest |segment length - nominal| over all strands (m)."""
        lengths = np.linalg.norm(np.diff(self.nodes, axis=1), axis=2)
        return float(np.max(np.abs(lengths - self.segment_lengths[:, None])))

    def penetration(self, hand: HandCollider) -> float:
        """Deepest residual penetration of any free node into the hand sphere (m)."""
        dist = np.linalg.norm(self.nodes[:, 1:, :] - hand.center, axis=2)
        return float(max(0.0, hand.radius - dist.min()))

    def kinetic_energy(self) -> float:
        """Total kinetic energy with unit node mass."""
        return float(0.5 * np.sum(self.velocities * self.velocities))

    def tip_heights(self) -> np.ndarray:
        return self.nodes[:, -1, 2].copy()


def _project_segment_tip(candidate, parent, seg, hand: HandCollider) -> np.ndarray:
    """Keep a constrained node both at segment distance and outside the sphere.

    Where the length-constrained candidate lands inside the hand sphere, it
    is moved to the circle where the sphere of radius ``seg`` around the
    parent intersects the hand sphere, staying as close as possible to the
    candidate. If the parent is so deep that no intersection exists the node
    is placed at the point of its reach farthest from the hand center.
    """
    offset = candidate - hand.center
    dist = np.linalg.norm(offset, axis=1)
    inside = dist < hand.radius
    if not inside.any():
        return candidate

    to_center = hand.center - parent
    gap = np.linalg.norm(to_center, axis=1)
    safe_gap = np.where(gap > 1e-12, gap, 1.0)
    axis = to_center / safe_gap[:, None]
    reachable = (gap >= np.abs(seg - hand.radius)) & (gap <= seg + hand.radius) & (gap > 1e-12)

    cos_a = np.clip(
        (gap * gap + seg * seg - hand.radius * hand.radius) / (2.0 * safe_gap * seg),
        -1.0,
        1.0,
    )
    sin_a = np.sqrt(np.maximum(0.0, 1.0 - cos_a * cos_a))

    lateral = (candidate - parent) - ((candidate - parent) * axis).sum(axis=1)[:, None] * axis
    lat_norm = np.linalg.norm(lateral, axis=1)
    fallback = np.where(
        np.abs(axis[:, 2:3]) < 0.9,
        np.cross(axis, np.array([0.0, 0.0, 1.0])),
        np.cross(axis, np.array([1.0, 0.0, 0.0])),
    )
    fb_norm = np.linalg.norm(fallback, axis=1, keepdims=True)
    fallback = fallback / np.where(fb_norm > 1e-12, fb_norm, 1.0)
    safe_lat = np.where(lat_norm > 1e-12, lat_norm, 1.0)
    side = np.where((lat_norm > 1e-12)[:, None], lateral / safe_lat[:, None], fallback)

    on_circle = parent + seg[:, None] * (cos_a[:, None] * axis + sin_a[:, None] * side)
    farthest = parent - seg[:, None] * axis

    out = np.where((inside & reachable)[:, None], on_circle, candidate)
    out = np.where((inside & ~reachable)[:, None], farthest, out)
    return out


def step(state: StrandState, hand: HandCollider, params: StrandParams, dt: float = DEFAULT_DT) -> StrandState:
    """Advance one strand by dt (release handling included)."""
    patch = StrandPatch([state], params)
    patch.step(hand, dt)
    return patch.to_states()[0]


def patch_step(states, hand: HandCollider, params: StrandParams, dt: float = DEFAULT_DT) -> list[StrandState]:
    """Advance a grid of strands independently; order of strands is irrelevant."""
    states = list(states)
    if not states:
        return []
    patch = StrandPatch(states, params)
    patch.step(hand, dt)
    return patch.to_states()


def release_update(state: StrandState, hand: HandCollider, grain, stand_blend: float = 0.5) -> StrandState:
    """Apply the release rule to a strand whose contact just ended.

    Against-grain episodes freeze the release shape, reoriented toward
    vertical-plus-reverse-grain, as the new rest pose and mark the strand
    standing. With-grain episodes restore the original rest pose.
    """
    grain = np.asarray(grain, dtype=np.float64)
    grain = grain / np.linalg.norm(grain)
    sweep = state.episode_sweep
    hand_rate = float(np.asarray(hand.velocity, dtype=np.float64) @ grain)
    against = sweep < 0.0 if sweep != 0.0 else hand_rate < 0.0

    if against:
        stand_dir = _UP - grain
        stand_dir = stand_dir / np.linalg.norm(stand_dir)
        shape = np.diff(state.nodes, axis=0) / state.segment_length
        w = stand_blend
        blended = (1.0 - w) * shape + w * stand_dir[None, :]
        norms = np.linalg.norm(blended, axis=1, keepdims=True)
        blended = np.where(norms > 1e-12, blended / np.where(norms > 1e-12, norms, 1.0), stand_dir)
        return replace(
            state,
            rest_directions=blended,
            released_standing=True,
            in_contact=False,
            episode_sweep=0.0,
        )
    return replace(
        state,
        rest_directions=state.original_rest_directions.copy(),
        released_standing=False,
        in_contact=False,
        episode_sweep=0.0,
    )


def grid_strands(
    origin,
    grain,
    extent,
    params: StrandParams,
    hair_length: float,
    nx: int = 40,
    ny: int = 40,
) -> StrandPatch:
    """Strand grid covering a rectangular patch: nx columns along the grain,
    ny rows across it."""
    origin = np.asarray(origin, dtype=np.float64)
    g = np.asarray(grain, dtype=np.float64)
    g = g / np.linalg.norm(g)
    lateral = np.cross(_UP, g)
    lateral = lateral / np.linalg.norm(lateral)
    us = np.linspace(0.0, extent[0], nx)
    ws = np.linspace(0.0, extent[1], ny)
    states = []
    for u in us:
        for w in ws:
            root = origin + u * g + w * lateral
            states.append(new_strand(root, params, hair_length))
    return StrandPatch(states, params)


def write_frames_jsonl(path, frames) -> None:
    """Export animation frames, one record per strand per frame.

    ``frames`` is an iterable of (frame_index, nodes, standing) where nodes
    is (strands, segments + 1, 3) and standing is a boolean mask.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame_index, nodes, standing in frames:
            for strand_id in range(nodes.shape[0]):
                record = {
                    "frame": int(frame_index),
                    "strand": int(strand_id),
                    "standing": bool(standing[strand_id]),
                    "nodes": [[float(c) for c in node] for node in nodes[strand_id]],
                }
                fh.write(json.dumps(record))
                fh.write("\n")

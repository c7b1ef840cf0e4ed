"""Recover model parameters from measured (position, force) traces.

Growth-direction traces are flat: the level is the mean of the steady
region after full engagement. Reverse-direction traces are periodic; the
spatial period comes from an autocorrelation peak and the full curve fit
searches the hand-clearance h (the only nonlinear parameter), solving the
force scale k exactly by linear least squares at each candidate since the
model is linear in k. The grid minimum over h is then refined by
golden-section search.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import StrokeDirection
from .errors import (
    FitConvergenceError,
    InputError,
    PeriodicityNotFound,
    TraceParseError,
)
from .force_model import cycle_period, ramp_length

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# Fraction of the trace maximum that counts as contact onset; real traces
# drift around zero before the sensor engages.
_ONSET_FRACTION = 0.05

# Autocorrelation peak height required to call a trace periodic.
_PERIODICITY_THRESHOLD = 0.2


@dataclass(eq=False)
class ForceTrace:
    """A measured stroke: positions (m, non-decreasing) and vertical forces (N)."""

    position: np.ndarray
    force: np.ndarray
    direction: StrokeDirection
    speed: float | None = None
    metadata: dict = field(default_factory=dict)
    resorted: bool = False

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64)
        frc = np.asarray(self.force, dtype=np.float64)
        if pos.ndim != 1 or pos.shape != frc.shape or pos.size == 0:
            raise InputError("position and force must be equal-length 1-D arrays")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(frc))):
            raise InputError("trace contains non-finite values")
        if np.any(np.diff(pos) < 0):
            raise InputError("positions must be non-decreasing")
        if np.any(frc < 0):
            raise InputError("forces must be >= 0")
        self.position = pos
        self.force = frc

    def __len__(self) -> int:
        return self.position.size

    @property
    def span(self) -> float:
        return float(self.position[-1] - self.position[0])


@dataclass(eq=False)
class FitResult:
    """Recovered parameters and fit quality for one trace."""

    k_hat: float | None = None
    h_hat: float | None = None
    P_hat: float | None = None
    F0_hat: float | None = None
    residual_rms: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        if self.residual_rms < 0:
            raise InputError("residual_rms must be >= 0")
        if self.P_hat is not None and not self.P_hat > 0:
            raise InputError("P_hat must be positive")

    def to_lines(self) -> list[str]:
        """key=value lines for reports and CLI output."""
        lines = []
        for name in ("F0_hat", "k_hat", "h_hat", "P_hat"):
            value = getattr(self, name)
            if value is not None:
                lines.append(f"{name}={value!r}")
        lines.append(f"residual_rms={self.residual_rms!r}")
        lines.append(f"iterations={self.iterations}")
        return lines


@dataclass(eq=False)
class GrowthFit:
    """Steady-level estimate for a with-grain trace."""

    f0: float
    stderr: float
    count: int


_TRACE_HEADERS = (["pos", "force"], ["t", "pos", "force"])


def load_trace(path, direction: StrokeDirection, speed: float | None = None) -> ForceTrace:
    """Read a force-trace CSV with header ``pos,force`` or ``t,pos,force``.

    Rows are sorted by position (a resort sets the ``resorted`` flag), the
    pre-contact baseline (mean force at pos < 0) is subtracted, pre-contact
    rows are dropped, and any tiny negatives left by the subtraction are
    clamped to zero.
    """
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceParseError("empty trace file") from None
        header = [h.strip().lower() for h in header]
        if header not in _TRACE_HEADERS:
            raise TraceParseError(f"unrecognized trace header {header!r}", line=1)
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
        raise TraceParseError("trace file has a header but no samples")

    data = np.asarray(rows, dtype=np.float64)
    pos = data[:, -2]
    frc = data[:, -1]

    resorted = bool(np.any(np.diff(pos) < 0))
    if resorted:
        order = np.argsort(pos, kind="stable")
        pos, frc = pos[order], frc[order]

    pre_contact = pos < 0.0
    baseline = float(frc[pre_contact].mean()) if pre_contact.any() else 0.0
    keep = ~pre_contact
    pos, frc = pos[keep], np.maximum(frc[keep] - baseline, 0.0)
    if pos.size == 0:
        raise TraceParseError("trace has no samples at or past contact (pos >= 0)")

    metadata = {"baseline": baseline, "pre_contact_samples": int(pre_contact.sum())}
    return ForceTrace(pos, frc, direction, speed=speed, metadata=metadata, resorted=resorted)


def save_trace(path, trace: ForceTrace) -> None:
    """Write a trace as ``pos,force`` CSV (shortest round-trip floats)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("pos,force\n")
        for p, f in zip(trace.position, trace.force):
            fh.write(f"{float(p)!r},{float(f)!r}\n")


def fit_growth(trace: ForceTrace, engagement_length: float = 0.0) -> GrowthFit:
    """Mean and standard error of the steady region (pos > engagement_length)."""
    if trace.direction is not StrokeDirection.ALONG_GRAIN:
        raise InputError("fit_growth expects a with-grain trace")
    mask = trace.position > engagement_length
    values = trace.force[mask]
    if values.size < 10:
        raise InputError(
            f"need at least 10 samples past engagement, got {values.size}"
        )
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return GrowthFit(mean, stderr, int(values.size))


def estimate_period(trace: ForceTrace, resample_points: int | None = None) -> float:
    """Dominant spatial period of a reverse-stroke trace via autocorrelation.

    The force is resampled onto a uniform position grid, the normalized
    autocorrelation is scanned for its first local maximum past the zero-lag
    main lobe, and the peak lag is refined by parabolic interpolation.
    Raises PeriodicityNotFound when no sufficiently strong peak exists or
    the trace is shorter than two detected periods.
    """
    if trace.direction is not StrokeDirection.AGAINST_GRAIN:
        raise InputError("estimate_period expects an against-grain trace")
    if len(trace) < 8 or trace.span <= 0:
        raise InputError("trace too short for period estimation")

    m = resample_points if resample_points is not None else max(256, len(trace))
    grid = np.linspace(trace.position[0], trace.position[-1], m)
    values = np.interp(grid, trace.position, trace.force)
    dx = (grid[-1] - grid[0]) / (m - 1)

    centered = values - values.mean()
    denom = float(centered @ centered)
    if denom <= 0.0:
        raise PeriodicityNotFound("no periodicity detected")
    corr = np.correlate(centered, centered, mode="full")[m - 1 :] / denom

    # Skip the zero-lag main lobe before hunting for the first real peak.
    below = np.nonzero(corr < 0.5)[0]
    guard = int(below[0]) if below.size else m
    peak = None
    for lag in range(max(guard, 1), m - 1):
        if corr[lag] > corr[lag - 1] and corr[lag] >= corr[lag + 1] and corr[lag] > _PERIODICITY_THRESHOLD:
            peak = lag
            break
    if peak is None:
        raise PeriodicityNotFound("no periodicity detected")

    y0, y1, y2 = corr[peak - 1], corr[peak], corr[peak + 1]
    curvature = y0 - 2.0 * y1 + y2
    offset = (y0 - y2) / (2.0 * curvature) if curvature != 0.0 else 0.0
    period = (peak + float(offset)) * dx
    if period > trace.span / 2.0:
        raise PeriodicityNotFound("trace spans fewer than two periods")
    return period


def _model_shape(x: np.ndarray, h: float, l: float, b: float) -> np.ndarray:
    """Reverse-force curve with unit force scale, zero before contact."""
    period = cycle_period(l, h, b)
    ramp = ramp_length(l, h)
    xr = np.mod(x, period)
    theta = np.where(xr < ramp, 0.5 * np.pi * xr / ramp, 0.5 * np.pi)
    sin_t = np.sin(theta)
    denom = np.maximum((h * np.cos(theta) + xr * sin_t) ** 2, 1e-9)
    shape = sin_t * sin_t / denom
    return np.where(x < 0.0, 0.0, shape)


def _onset_index(values: np.ndarray) -> int:
    peak = float(values.max())
    if peak <= 0.0:
        return 0
    hits = np.nonzero(values >= _ONSET_FRACTION * peak)[0]
    return int(hits[0]) if hits.size else 0


def fit_reverse(
    trace: ForceTrace,
    l: float,
    b: float,
    h_grid: int = 192,
    align: bool = True,
    max_iterations: int = 240,
) -> FitResult:
    """Fit force scale and hand clearance to an against-grain trace.

    l (hair length) and b (bundle width) are known from the physical setup.
    The residual is minimized over h on a grid spanning (0, l), with the
    exact least-squares k at each h, then the best cell is refined by
    golden-section search. Ties prefer the smallest h. Onset alignment
    shifts the data so its first 5%-of-max crossing matches the model's,
    evaluated on the same grid, compensating baseline drift in measured
    traces. Raises FitConvergenceError (carrying the best result so far)
    if the refinement fails to reach its bracket tolerance.
    """
    if trace.direction is not StrokeDirection.AGAINST_GRAIN:
        raise InputError("fit_reverse expects an against-grain trace")
    if not (l > 0 and b > 0):
        raise InputError("l and b must be positive")
    if trace.span < b:
        raise InputError("trace shorter than one period (span below bundle width)")

    x = trace.position - trace.position[0]
    y = trace.force
    trace_onset = x[_onset_index(y)]
    evaluations = 0

    def sse_at(h: float) -> tuple[float, float]:
        nonlocal evaluations
        evaluations += 1
        shape = _model_shape(x, h, l, b)
        if align:
            model_onset = x[_onset_index(shape)]
            shift = trace_onset - model_onset
            if shift != 0.0:
                shape = _model_shape(x - shift, h, l, b)
        gg = float(shape @ shape)
        if gg <= 0.0:
            return float(y @ y), 0.0
        k = float(shape @ y) / gg
        if k < 0.0:
            k = 0.0
        resid = y - k * shape
        return float(resid @ resid), k

    h_lo, h_hi = 0.02 * l, 0.98 * l
    candidates = np.linspace(h_lo, h_hi, h_grid)
    best_sse = math.inf
    best_h = candidates[0]
    for h in candidates:
        sse, _ = sse_at(float(h))
        if sse < best_sse:
            best_sse = sse
            best_h = float(h)

    cell = (candidates[1] - candidates[0]) if h_grid > 1 else (h_hi - h_lo)
    a = max(h_lo, best_h - cell)
    c = min(h_hi, best_h + cell)
    x1 = c - _GOLDEN * (c - a)
    x2 = a + _GOLDEN * (c - a)
    f1, _ = sse_at(x1)
    f2, _ = sse_at(x2)
    tol = max(1e-13, 1e-12 * l)
    iterations = 0
    while (c - a) > tol and iterations < max_iterations:
        if f1 < f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - _GOLDEN * (c - a)
            f1, _ = sse_at(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (c - a)
            f2, _ = sse_at(x2)
        iterations += 1

    h_refined = float(0.5 * (a + c))
    sse_refined, k_refined = sse_at(h_refined)
    if sse_refined <= best_sse:
        best_h, best_sse = h_refined, sse_refined
    _, best_k = sse_at(best_h)

    result = FitResult(
        k_hat=float(best_k),
        h_hat=float(best_h),
        P_hat=cycle_period(l, float(best_h), b),
        residual_rms=math.sqrt(best_sse / x.size),
        iterations=evaluations,
    )
    if (c - a) > tol:
        raise FitConvergenceError(
            f"golden-section refinement did not reach tolerance after {iterations} iterations",
            best=result,
        )
    return result


def synthesize_trace(
    k: float,
    l: float,
    h: float,
    b: float,
    direction: StrokeDirection = StrokeDirection.AGAINST_GRAIN,
    span: float = 0.25,
    dx: float = 5e-4,
    noise: float = 0.0,
    seed: int = 0,
    f0: float = 0.05,
) -> ForceTrace:
    """Forward-model trace on a uniform grid, optionally with seeded
    multiplicative noise. Growth-direction traces are flat at ``f0`` newtons."""
    if span <= 0 or dx <= 0:
        raise InputError("span and dx must be positive")
    x = np.arange(0.0, span, dx)
    if direction is StrokeDirection.AGAINST_GRAIN:
        y = k * _model_shape(x, h, l, b)
    elif direction is StrokeDirection.ALONG_GRAIN:
        y = np.full_like(x, f0)
    else:
        raise InputError("direction must be along or against the grain")
    if noise > 0.0:
        rng = np.random.default_rng(seed)
        y = y * (1.0 + noise * rng.standard_normal(y.size))
    y = np.maximum(y, 0.0)
    metadata = {"synthetic": True, "k": k, "l": l, "h": h, "b": b, "noise": noise, "seed": seed}
    return ForceTrace(x, y, direction, metadata=metadata)

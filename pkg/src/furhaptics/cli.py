"""Command-line entry points.

Subcommands: ``replay`` a hand trajectory into command/focal traces,
``fit`` a measured force trace, ``period`` for the closed-form lift-cycle
period, ``gen-synthetic`` for forward-model traces, and ``field`` for the
simulated array's pressure grid. Exit code 0 on success, 1 with a message
on stderr for any handled error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .array_sim import ArrayGeometry, field_grid, solve_focus, write_field_grid
from .core import StrokeDirection, load_trajectory
from .errors import FurHapticsError
from .fitting import fit_growth, fit_reverse, load_trace, save_trace, synthesize_trace
from .force_model import cycle_period
from .session import SessionConfig, run_session


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="furhaptics",
        description="Interactive visuo-haptic fur stroking engine",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    replay = sub.add_parser("replay", help="run a session from a hand trajectory CSV")
    replay.add_argument("trajectory", help="CSV with header t,x,y,z")
    replay.add_argument("--config", help="session config file (key = value)")
    replay.add_argument("--out", help="output directory for trace files")
    replay.add_argument("--strands", action="store_true", help="enable the strand simulation")
    replay.add_argument(
        "--acoustic-verify", action="store_true", help="verify focal samples against the simulated array"
    )

    fit = sub.add_parser("fit", help="fit model parameters to a force trace CSV")
    fit.add_argument("trace", help="CSV with header pos,force or t,pos,force")
    fit.add_argument("--direction", choices=("growth", "reverse"), required=True)
    fit.add_argument("--l", type=float, required=True, help="hair length (m)")
    fit.add_argument("--b", type=float, help="bundle width (m), required for reverse fits")
    fit.add_argument("--report", help="also write the result as key=value lines to this file")

    period = sub.add_parser("period", help="closed-form lift-cycle period")
    period.add_argument("--l", type=float, required=True, help="hair length (m)")
    period.add_argument("--h", type=float, required=True, help="hand height (m)")
    period.add_argument("--b", type=float, required=True, help="bundle width (m)")

    gen = sub.add_parser("gen-synthetic", help="generate a synthetic force trace CSV")
    gen.add_argument("--k", type=float, required=True, help="force scale (N m^2)")
    gen.add_argument("--l", type=float, required=True, help="hair length (m)")
    gen.add_argument("--h", type=float, required=True, help="hand height (m)")
    gen.add_argument("--b", type=float, required=True, help="bundle width (m)")
    gen.add_argument("--direction", choices=("growth", "reverse"), default="reverse")
    gen.add_argument("--f0", type=float, default=0.05, help="steady growth force (N)")
    gen.add_argument("--span", type=float, default=0.25, help="stroke span (m)")
    gen.add_argument("--dx", type=float, default=5e-4, help="sample spacing (m)")
    gen.add_argument("--noise", type=float, default=0.0, help="multiplicative noise fraction")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output CSV path")

    fld = sub.add_parser("field", help="solve a focus and export the pressure-field grid")
    fld.add_argument("--focus", required=True, help="focal point as x,y,z (m)")
    fld.add_argument("--grid", type=int, default=41, help="grid resolution per side")
    fld.add_argument("--extent", type=float, default=0.02, help="half extent of the grid (m)")
    fld.add_argument("--out", help="write the magnitude grid CSV (plus .meta sidecar)")
    fld.add_argument("--pgm", help="also write an 8-bit graymap image")

    return parser


def _cmd_replay(args) -> int:
    trajectory = load_trajectory(args.trajectory)
    config = SessionConfig.from_file(args.config) if args.config else SessionConfig()
    if args.out:
        config.out_dir = Path(args.out)
    if args.strands:
        config.strands_enabled = True
    if args.acoustic_verify:
        config.acoustic_verify = True
    result = run_session(config, trajectory)
    for key, value in result.report.items():
        print(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
    for kind, path in result.paths.items():
        print(f"wrote.{kind}={path}")
    return 0


def _cmd_fit(args) -> int:
    if args.direction == "growth":
        trace = load_trace(args.trace, StrokeDirection.ALONG_GRAIN)
        growth = fit_growth(trace, engagement_length=args.l)
        lines = [
            f"F0_hat={growth.f0!r}",
            f"stderr={growth.stderr!r}",
            f"samples={growth.count}",
        ]
    else:
        if args.b is None:
            print("error: --b is required for reverse fits", file=sys.stderr)
            return 1
        trace = load_trace(args.trace, StrokeDirection.AGAINST_GRAIN)
        result = fit_reverse(trace, l=args.l, b=args.b)
        lines = result.to_lines()
    for line in lines:
        print(line)
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def _cmd_period(args) -> int:
    print(f"{cycle_period(args.l, args.h, args.b):.6f} m")
    return 0


def _cmd_gen(args) -> int:
    direction = (
        StrokeDirection.ALONG_GRAIN if args.direction == "growth" else StrokeDirection.AGAINST_GRAIN
    )
    trace = synthesize_trace(
        k=args.k,
        l=args.l,
        h=args.h,
        b=args.b,
        direction=direction,
        span=args.span,
        dx=args.dx,
        noise=args.noise,
        seed=args.seed,
        f0=args.f0,
    )
    save_trace(args.out, trace)
    print(f"wrote {args.out} ({len(trace)} samples)")
    return 0


def _cmd_field(args) -> int:
    try:
        focus = tuple(float(part) for part in args.focus.split(","))
    except ValueError:
        print("error: --focus expects x,y,z", file=sys.stderr)
        return 1
    if len(focus) != 3:
        print("error: --focus expects x,y,z", file=sys.stderr)
        return 1
    geometry = ArrayGeometry.grid()
    solution = solve_focus(geometry, focus)
    grid = field_grid(
        geometry, solution, focus, half_extent=args.extent, shape=(args.grid, args.grid)
    )
    peak = np.unravel_index(int(np.argmax(grid)), grid.shape)
    print(f"transducers={geometry.count}")
    print(f"wavelength={geometry.wavelength!r}")
    print(f"peak_cell={peak[0]},{peak[1]}")
    print(f"peak_magnitude={float(grid[peak])!r}")
    if args.out:
        write_field_grid(args.out, grid, geometry, focus, pgm_path=args.pgm)
        print(f"wrote.grid={args.out}")
        if args.pgm:
            print(f"wrote.pgm={args.pgm}")
    return 0


_HANDLERS = {
    "replay": _cmd_replay,
    "fit": _cmd_fit,
    "period": _cmd_period,
    "gen-synthetic": _cmd_gen,
    "field": _cmd_field,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except FurHapticsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line entry points: plot-trajectory and plot-ensemble.

Both read a run directory produced by the simulator CLI and write one PNG.
Table geometry is taken from the run's summary echo and can be overridden
with --a/--b/--radius.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from .figures import PlotSpec, plot_ensemble, plot_trajectory
from .io import PlotDataError, find_snapshots, read_run_geometry


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("directory", help="run directory written by the simulator")
    parser.add_argument("-o", "--out", required=True, help="output image path")
    parser.add_argument("--a", type=float, help="table semi-axis along x (default: from summary)")
    parser.add_argument("--b", type=float, help="table semi-axis along y (default: from summary)")
    parser.add_argument("--radius", type=float, help="disk radius (default: from summary)")
    parser.add_argument("--title", default="", help="figure title")


def _geometry(args: argparse.Namespace, summary_name: str) -> tuple[float, float, float]:
    a = args.a
    b = args.b
    radius = args.radius
    if a is None or b is None or radius is None:
        sa, sb, sr = read_run_geometry(os.path.join(args.directory, summary_name))
        a = sa if a is None else a
        b = sb if b is None else b
        radius = sr if radius is None else radius
    return a, b, radius


def trajectory_main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="plot-trajectory", description="table + trajectory + impact markers")
    _add_common(parser)
    args = parser.parse_args(argv)
    try:
        a, b, radius = _geometry(args, "summary.json")
        spec = PlotSpec(
            trajectory_csv=os.path.join(args.directory, "trajectory.csv"),
            events_csv=os.path.join(args.directory, "events.csv"),
            a=a,
            b=b,
            disk_radius=radius,
            out_path=args.out,
            title=args.title,
        )
        path = plot_trajectory(spec)
    except PlotDataError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


def ensemble_main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="plot-ensemble", description="scatter panels of ensemble snapshots")
    _add_common(parser)
    args = parser.parse_args(argv)
    try:
        a, b, radius = _geometry(args, "ensemble_summary.json")
        spec = PlotSpec(
            snapshot_csvs=tuple(find_snapshots(args.directory)),
            a=a,
            b=b,
            disk_radius=radius,
            out_path=args.out,
            title=args.title,
        )
        path = plot_ensemble(spec)
    except PlotDataError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(trajectory_main())

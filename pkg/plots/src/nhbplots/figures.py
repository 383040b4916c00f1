"""Figure rendering: table + trajectory with impact markers, ensemble panels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    PlotDataError,
    read_events,
    read_snapshot,
    read_trajectory,
)

# Impact markers must sit on the wall; anything farther off than this means
# the inputs are inconsistent and the figure would lie.
MARKER_BOUNDARY_TOL = 1.0e-6

SIDE_COLORS = {"front": "tab:red", "back": "tab:blue"}


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input files, table geometry, output path, title."""

    trajectory_csv: Optional[str] = None
    events_csv: Optional[str] = None
    snapshot_csvs: tuple[str, ...] = ()
    a: float = 0.2
    b: float = 0.2
    disk_radius: float = 0.01
    out_path: str = "figure.png"
    title: str = ""
    dpi: int = 150


def _boundary_xy(a: float, b: float, n: int = 512) -> tuple[np.ndarray, np.ndarray]:
    psi = np.linspace(0.0, 2.0 * math.pi, n)
    return a * np.cos(psi), b * np.sin(psi)


def _table_h(a: float, b: float, x, y):
    return (np.asarray(x) / a) ** 2 + (np.asarray(y) / b) ** 2 - 1.0


def _draw_table(ax, a: float, b: float) -> None:
    bx, by = _boundary_xy(a, b)
    ax.plot(bx, by, color="black", linewidth=1.2)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    margin = 0.08 * max(a, b)
    ax.set_xlim(-a - margin, a + margin)
    ax.set_ylim(-b - margin, b + margin)


def _marker_positions(spec: PlotSpec, traj, events) -> dict[str, list[tuple[float, float]]]:
    """Contact point of each event, validated to lie on the wall."""
    positions: dict[str, list[tuple[float, float]]] = {"front": [], "back": []}
    for ev in events:
        idx = int(np.argmin(np.abs(traj.t - ev.tau)))
        if abs(traj.t[idx] - ev.tau) > 1e-6 * max(1.0, abs(ev.tau)):
            raise PlotDataError(
                f"event at tau={ev.tau} has no matching trajectory sample "
                f"(nearest t={traj.t[idx]})"
            )
        sign = 1.0 if ev.side == "front" else -1.0
        cx = traj.x[idx] + sign * spec.disk_radius * math.cos(traj.phi[idx])
        cy = traj.y[idx] + sign * spec.disk_radius * math.sin(traj.phi[idx])
        h_val = float(_table_h(spec.a, spec.b, cx, cy))
        if abs(h_val) > MARKER_BOUNDARY_TOL:
            raise PlotDataError(
                f"impact marker for event {ev.index} lies off the boundary: |h| = {abs(h_val):.3e}"
            )
        positions[ev.side].append((cx, cy))
    return positions


def plot_trajectory(spec: PlotSpec) -> str:
    """Render one run: table edge, rim paths, and impact markers by side.

    Raises ``PlotDataError`` when inputs are missing, malformed, or the
    computed markers do not sit on the wall.
    """
    if spec.trajectory_csv is None or spec.events_csv is None:
        raise PlotDataError("plot_trajectory needs trajectory_csv and events_csv")
    traj = read_trajectory(spec.trajectory_csv)
    events = read_events(spec.events_csv)
    markers = _marker_positions(spec, traj, events)

    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    _draw_table(ax, spec.a, spec.b)

    front_x = traj.x + spec.disk_radius * np.cos(traj.phi)
    front_y = traj.y + spec.disk_radius * np.sin(traj.phi)
    ax.plot(front_x, front_y, color="tab:gray", linewidth=0.7, label="front rim")
    ax.plot(traj.x, traj.y, color="tab:green", linewidth=0.9, linestyle="--", label="center")

    for side, pts in markers.items():
        if pts:
            arr = np.array(pts)
            ax.scatter(
                arr[:, 0],
                arr[:, 1],
                s=28,
                color=SIDE_COLORS[side],
                zorder=3,
                label=f"{side} impacts ({len(pts)})",
            )
    ax.legend(loc="upper right", fontsize=8)
    if spec.title:
        ax.set_title(spec.title)
    fig.savefig(spec.out_path, dpi=spec.dpi)
    plt.close(fig)
    return spec.out_path


def panel_grid(n: int) -> tuple[int, int]:
    """(rows, cols) for n panels: as square as possible, e.g. 4 -> (2, 2)."""
    ncols = math.ceil(math.sqrt(n))
    return math.ceil(n / ncols), ncols


def plot_ensemble(spec: PlotSpec) -> str:
    """Render one scatter panel per snapshot time on shared axes."""
    if not spec.snapshot_csvs:
        raise PlotDataError("plot_ensemble needs at least one snapshot CSV")
    snapshots = sorted((read_snapshot(p) for p in spec.snapshot_csvs), key=lambda s: s.time)

    nrows, ncols = panel_grid(len(snapshots))
    n = len(snapshots)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.0 * ncols, 4.0 * nrows), sharex=True, sharey=True, squeeze=False
    )
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    for ax, snap in zip(axes.flat, snapshots):
        _draw_table(ax, spec.a, spec.b)
        good = snap.ok & np.isfinite(snap.x) & np.isfinite(snap.y)
        ax.scatter(snap.x[good], snap.y[good], s=10, color="tab:purple", alpha=0.8)
        dropped = int(np.count_nonzero(~snap.ok))
        label = f"t = {snap.time:g} s"
        if dropped:
            label += f" ({dropped} failed)"
        ax.set_title(label, fontsize=10)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=spec.dpi)
    plt.close(fig)
    return spec.out_path

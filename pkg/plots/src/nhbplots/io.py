"""Strict readers for the simulator's output files.

The CSV headers are part of the simulator's interface contract and are
matched exactly; anything else is rejected so schema drift surfaces as an
error rather than a silently wrong figure.
"""

from __future__ import annotations

import csv
import json
import os
import re
from dataclasses import dataclass

import numpy as np

TRAJECTORY_HEADER = "t,x,y,theta,phi,xdot,ydot,thetadot,phidot,energy,h_front,h_back"
EVENTS_HEADER = "i,tau,side,mode,alpha,lambda1,lambda2,e_pre,e_post,grazing"
SNAPSHOT_HEADER = "member,x,y,theta,phi,xdot,ydot,thetadot,phidot,ok"

_SNAPSHOT_RE = re.compile(r"^snapshot_t(?P<tag>.+)\.csv$")


class PlotDataError(Exception):
    """Input files are missing, malformed, or inconsistent."""


def _read_csv(path: str, expected_header: str) -> list[dict[str, str]]:
    if not os.path.exists(path):
        raise PlotDataError(f"missing input file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotDataError(f"{path} is empty") from None
        if header != expected_header.split(","):
            raise PlotDataError(
                f"{path} has header {','.join(header)!r}, expected {expected_header!r}"
            )
        names = expected_header.split(",")
        rows = []
        for line in reader:
            if len(line) != len(names):
                raise PlotDataError(f"{path}: row with {len(line)} fields, expected {len(names)}")
            rows.append(dict(zip(names, line)))
        return rows


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    energy: np.ndarray


@dataclass(frozen=True)
class Event:
    index: int
    tau: float
    side: str
    mode: str
    grazing: bool


def read_trajectory(path: str) -> Trajectory:
    rows = _read_csv(path, TRAJECTORY_HEADER)
    if not rows:
        raise PlotDataError(f"{path} contains no samples")

    def col(name: str) -> np.ndarray:
        try:
            return np.array([float(r[name]) for r in rows])
        except ValueError as exc:
            raise PlotDataError(f"{path}: non-numeric value in column {name!r}: {exc}") from exc

    return Trajectory(t=col("t"), x=col("x"), y=col("y"), phi=col("phi"), energy=col("energy"))


def read_events(path: str) -> list[Event]:
    rows = _read_csv(path, EVENTS_HEADER)
    events = []
    for r in rows:
        try:
            events.append(
                Event(
                    index=int(r["i"]),
                    tau=float(r["tau"]),
                    side=r["side"],
                    mode=r["mode"],
                    grazing=r["grazing"] == "1",
                )
            )
        except ValueError as exc:
            raise PlotDataError(f"{path}: bad event row: {exc}") from exc
        if events[-1].side not in ("front", "back"):
            raise PlotDataError(f"{path}: unknown side {events[-1].side!r}")
    return events


def read_run_geometry(summary_path: str) -> tuple[float, float, float]:
    """Table semi-axes (a, b) and disk radius R from a run's summary echo."""
    if not os.path.exists(summary_path):
        raise PlotDataError(f"missing summary file: {summary_path}")
    with open(summary_path, encoding="utf-8") as fh:
        try:
            summary = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PlotDataError(f"{summary_path} is not valid JSON: {exc}") from exc
    try:
        echo = summary["config_echo"]
        return float(echo["table"]["a"]), float(echo["table"]["b"]), float(echo["params"]["R"])
    except (KeyError, TypeError) as exc:
        raise PlotDataError(f"{summary_path} lacks table/params echo: {exc}") from exc


@dataclass(frozen=True)
class Snapshot:
    time: float
    path: str
    x: np.ndarray
    y: np.ndarray
    ok: np.ndarray  # boolean mask of healthy members


def find_snapshots(directory: str) -> list[str]:
    names = [n for n in sorted(os.listdir(directory)) if _SNAPSHOT_RE.match(n)]
    if not names:
        raise PlotDataError(f"no snapshot_t*.csv files in {directory}")
    return [os.path.join(directory, n) for n in names]


def read_snapshot(path: str) -> Snapshot:
    match = _SNAPSHOT_RE.match(os.path.basename(path))
    if not match:
        raise PlotDataError(f"{path} is not named like snapshot_t<time>.csv")
    try:
        time = float(match.group("tag"))
    except ValueError as exc:
        raise PlotDataError(f"{path}: cannot parse snapshot time: {exc}") from exc
    rows = _read_csv(path, SNAPSHOT_HEADER)
    if not rows:
        raise PlotDataError(f"{path} contains no members")
    ok = np.array([r["ok"] == "1" for r in rows])

    def col(name: str) -> np.ndarray:
        return np.array([float(r[name]) if r[name] != "nan" else np.nan for r in rows])

    return Snapshot(time=time, path=path, x=col("x"), y=col("y"), ok=ok)

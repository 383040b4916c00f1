"""Scenario configuration, presets, and the trajectory/ensemble experiment runners.

Configs are JSON files with a versioned schema; unknown keys are rejected at
every nesting level and load/save round-trips are exact.  Runners emit CSV
and JSON files with 17-significant-digit floats so the written numbers parse
back bit-exactly and reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import EngineOptions, ExecutionTrace, simulate
from .errors import BilliardError, ConfigError
from .geometry import kinetic_energy
from .penny import PennyParams, PennyState, TableParams, impact_chart, penny_metric

SCHEMA_VERSION = 1

PRESET_NAMES = ("elastic-circle", "plastic-circle", "elastic-ellipse", "plastic-ellipse", "ensemble")

TRAJECTORY_HEADER = "t,x,y,theta,phi,xdot,ydot,thetadot,phidot,energy,h_front,h_back"
EVENTS_HEADER = "i,tau,side,mode,alpha,lambda1,lambda2,e_pre,e_post,grazing"
SNAPSHOT_HEADER = "member,x,y,theta,phi,xdot,ydot,thetadot,phidot,ok"


@dataclass(frozen=True)
class InitialConditions:
    """Seed values for the initial state; velocities follow from rolling."""

    x0: float = 0.0
    y0: float = 0.0
    theta0: float = 0.0
    phi0: float = math.pi / 2
    Omega: float = 10.0
    omega: float = 0.2


@dataclass(frozen=True)
class EnsembleSettings:
    """Perturbation-ensemble controls: member count, uniform bound on the
    rate perturbations, base RNG seed, and the snapshot times to record."""

    count: int = 100
    perturb_bound: float = 0.005
    rng_seed: int = 1234
    snapshot_times: tuple[float, ...] = (0.0, 5.0, 10.0, 20.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        if self.count < 1:
            raise ConfigError(f"ensemble count must be >= 1, got {self.count}")
        if self.perturb_bound < 0.0:
            raise ConfigError(f"perturb_bound must be >= 0, got {self.perturb_bound}")
        if not self.snapshot_times:
            raise ConfigError("snapshot_times must not be empty")
        if any(t < 0.0 for t in self.snapshot_times):
            raise ConfigError("snapshot_times must be nonnegative")


@dataclass(frozen=True)
class ScenarioConfig:
    params: PennyParams
    table: TableParams
    initial: InitialConditions
    engine: EngineOptions
    ensemble: Optional[EnsembleSettings] = None
    output_dir: Optional[str] = None


def _take(section: dict, allowed: dict, where: str) -> dict:
    """Pick allowed keys from a config section, rejecting unknown ones."""
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object, got {type(section).__name__}")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(unknown)}")
    out = {}
    for key, required in allowed.items():
        if key in section:
            out[key] = section[key]
        elif required:
            raise ConfigError(f"missing required key {key!r} in {where}")
    return out


def config_to_dict(cfg: ScenarioConfig, include_output_dir: bool = True) -> dict:
    data = {
        "schema_version": SCHEMA_VERSION,
        "params": {"R": cfg.params.R, "m": cfg.params.m, "I": cfg.params.I, "J": cfg.params.J},
        "table": {"a": cfg.table.a, "b": cfg.table.b},
        "initial": {
            "x0": cfg.initial.x0,
            "y0": cfg.initial.y0,
            "theta0": cfg.initial.theta0,
            "phi0": cfg.initial.phi0,
            "Omega": cfg.initial.Omega,
            "omega": cfg.initial.omega,
        },
        "engine": {
            "impact_mode": cfg.engine.impact_mode,
            "restitution": cfg.engine.restitution,
            "max_impacts": cfg.engine.max_impacts,
            "t_max": cfg.engine.t_max,
            "scan_dt": cfg.engine.scan_dt,
            "root_tol": cfg.engine.root_tol,
            "record_dt": cfg.engine.record_dt,
        },
    }
    if cfg.ensemble is not None:
        data["ensemble"] = {
            "count": cfg.ensemble.count,
            "perturb_bound": cfg.ensemble.perturb_bound,
            "rng_seed": cfg.ensemble.rng_seed,
            "snapshot_times": list(cfg.ensemble.snapshot_times),
        }
    if include_output_dir and cfg.output_dir is not None:
        data["output_dir"] = cfg.output_dir
    return data


def config_from_dict(data: dict) -> ScenarioConfig:
    top = _take(
        data,
        {
            "schema_version": True,
            "params": True,
            "table": True,
            "initial": True,
            "engine": True,
            "ensemble": False,
            "output_dir": False,
        },
        "config",
    )
    if top["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {top['schema_version']!r}, expected {SCHEMA_VERSION}")
    try:
        params = PennyParams(**_take(top["params"], {"R": True, "m": True, "I": True, "J": True}, "params"))
        table = TableParams(**_take(top["table"], {"a": True, "b": True}, "table"))
        initial = InitialConditions(
            **_take(
                top["initial"],
                {"x0": True, "y0": True, "theta0": True, "phi0": True, "Omega": True, "omega": True},
                "initial",
            )
        )
        engine = EngineOptions(
            **_take(
                top["engine"],
                {
                    "impact_mode": True,
                    "restitution": False,
                    "max_impacts": False,
                    "t_max": False,
                    "scan_dt": False,
                    "root_tol": False,
                    "record_dt": False,
                },
                "engine",
            )
        )
        ensemble = None
        if top.get("ensemble") is not None:
            section = _take(
                top["ensemble"],
                {"count": True, "perturb_bound": True, "rng_seed": True, "snapshot_times": True},
                "ensemble",
            )
            section["snapshot_times"] = tuple(section["snapshot_times"])
            ensemble = EnsembleSettings(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    return ScenarioConfig(
        params=params,
        table=table,
        initial=initial,
        engine=engine,
        ensemble=ensemble,
        output_dir=top.get("output_dir"),
    )


def save_config(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def preset(name: str) -> ScenarioConfig:
    """Built-in scenarios: coin-sized disk, 0.2 m table, heading pi/2,
    rolling rate 10 rad/s, heading rate 0.2 rad/s."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    # Thin-disk inertia values written out exactly (I = m R^2 / 2, J = m R^2 / 4).
    params = PennyParams(R=0.01, m=0.0025, I=1.25e-7, J=6.25e-8)
    circle = TableParams(a=0.20, b=0.20)
    ellipse = TableParams(a=0.15, b=0.20)
    initial = InitialConditions()
    if name == "ensemble":
        return ScenarioConfig(
            params=params,
            table=circle,
            initial=initial,
            engine=EngineOptions(impact_mode="elastic", max_impacts=100_000, t_max=25.0),
            ensemble=EnsembleSettings(),
        )
    mode, shape = name.split("-")
    return ScenarioConfig(
        params=params,
        table=circle if shape == "circle" else ellipse,
        initial=initial,
        engine=EngineOptions(impact_mode=mode, max_impacts=20, t_max=200.0),
    )


def initial_state(cfg: ScenarioConfig) -> PennyState:
    ic = cfg.initial
    return PennyState.from_rolling(ic.x0, ic.y0, ic.theta0, ic.phi0, ic.Omega, ic.omega, cfg.params)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_rows(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header.split(","))
        for row in rows:
            writer.writerow(row)


@dataclass
class ScenarioResult:
    trace: ExecutionTrace
    out_dir: str
    summary: dict


def run_scenario(cfg: ScenarioConfig, out_dir: Optional[str] = None) -> ScenarioResult:
    """Simulate one scenario and write trajectory.csv, events.csv, summary.json.

    Output files are flushed even when the run terminates with an engine
    error, so partial results are always inspectable.
    """
    target = out_dir or cfg.output_dir
    if target is None:
        raise ConfigError("no output directory: set output_dir in the config or pass --out")
    os.makedirs(target, exist_ok=True)
    cfg.table.check_clearance(cfg.params)

    state0 = initial_state(cfg)
    trace = simulate(state0, cfg.table, cfg.params, cfg.engine)

    metric = penny_metric(cfg.params)
    chart_front = impact_chart(cfg.table, cfg.params, "front")
    chart_back = impact_chart(cfg.table, cfg.params, "back")

    energies = []
    rows = []
    for arc in trace.arcs:
        for t, s in zip(arc.times, arc.states):
            q, v = s.q, s.v
            energy = kinetic_energy(metric, q, v)
            energies.append(energy)
            rows.append(
                [_fmt(t)] + [_fmt(val) for val in (*q, *v)]
                + [_fmt(energy), _fmt(chart_front.h(q)), _fmt(chart_back.h(q))]
            )
    _write_rows(os.path.join(target, "trajectory.csv"), TRAJECTORY_HEADER, rows)

    event_rows = []
    for i, ev in enumerate(trace.events):
        lam = list(ev.lambdas) + [0.0, 0.0]
        event_rows.append(
            [
                str(i),
                _fmt(ev.time),
                ev.side,
                cfg.engine.impact_mode,
                _fmt(ev.alpha),
                _fmt(lam[0]),
                _fmt(lam[1]),
                _fmt(ev.energy_before),
                _fmt(ev.energy_after),
                "1" if ev.grazing else "0",
            ]
        )
    _write_rows(os.path.join(target, "events.csv"), EVENTS_HEADER, event_rows)

    if energies and energies[0] > 0.0:
        e0 = energies[0]
        drift = float(np.max(np.abs(np.array(energies) - e0)) / e0)
    else:
        drift = 0.0
    summary = {
        "termination": trace.termination,
        "impact_count": len(trace.events),
        "energy_drift_rel": drift,
        "error_message": trace.error_message,
        "config_echo": config_to_dict(cfg, include_output_dir=False),
    }
    with open(os.path.join(target, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return ScenarioResult(trace=trace, out_dir=target, summary=summary)


def _time_tag(t: float) -> str:
    return format(float(t), "g")


@dataclass
class _MemberResult:
    index: int
    ok: bool
    states: dict
    error: Optional[str] = None


@dataclass
class EnsembleResult:
    out_dir: str
    summary: dict


def run_ensemble(
    cfg: ScenarioConfig, out_dir: Optional[str] = None, workers: Optional[int] = None
) -> EnsembleResult:
    """Run the perturbation ensemble and write one snapshot CSV per time.

    Member i perturbs the base rolling and heading rates by independent
    uniform draws in (-perturb_bound, +perturb_bound) seeded with
    rng_seed + i, so results are deterministic and independent of how the
    parallel map interleaves.  Failing members are flagged (ok=0, NaN rows)
    and the run continues.
    """
    if cfg.ensemble is None:
        raise ConfigError("config has no ensemble section")
    ens = cfg.ensemble
    if cfg.engine.t_max < max(ens.snapshot_times):
        raise ConfigError(
            f"engine t_max = {cfg.engine.t_max} is shorter than the last snapshot "
            f"time {max(ens.snapshot_times)}"
        )
    target = out_dir or cfg.output_dir
    if target is None:
        raise ConfigError("no output directory: set output_dir in the config or pass --out")
    os.makedirs(target, exist_ok=True)

    ic = cfg.initial

    def run_member(i: int) -> _MemberResult:
        rng = np.random.default_rng(ens.rng_seed + i)
        d_omega_roll = rng.uniform(-ens.perturb_bound, ens.perturb_bound)
        d_omega_head = rng.uniform(-ens.perturb_bound, ens.perturb_bound)
        state0 = PennyState.from_rolling(
            ic.x0, ic.y0, ic.theta0, ic.phi0, ic.Omega + d_omega_roll, ic.omega + d_omega_head, cfg.params
        )
        try:
            trace = simulate(state0, cfg.table, cfg.params, cfg.engine)
            if trace.termination == "error":
                return _MemberResult(i, ok=False, states={}, error=trace.error_message)
            states = {t: trace.state_at(t, cfg.params) for t in ens.snapshot_times}
            return _MemberResult(i, ok=True, states=states)
        except (BilliardError, ValueError) as exc:
            return _MemberResult(i, ok=False, states={}, error=str(exc))

    n_workers = workers if workers else min(8, ens.count)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            members = list(pool.map(run_member, range(ens.count)))
    else:
        members = [run_member(i) for i in range(ens.count)]

    snapshot_files = {}
    spreads = {}
    for t in ens.snapshot_times:
        rows = []
        points = []
        for res in members:
            if res.ok:
                s = res.states[t]
                rows.append(
                    [str(res.index)]
                    + [_fmt(val) for val in (s.x, s.y, s.theta, s.phi, s.xdot, s.ydot, s.thetadot, s.phidot)]
                    + ["1"]
                )
                points.append((s.x, s.y))
            else:
                rows.append([str(res.index)] + ["nan"] * 8 + ["0"])
        name = f"snapshot_t{_time_tag(t)}.csv"
        _write_rows(os.path.join(target, name), SNAPSHOT_HEADER, rows)
        snapshot_files[_time_tag(t)] = name
        if len(points) >= 2:
            pts = np.array(points)
            diff = pts[:, None, :] - pts[None, :, :]
            spreads[_time_tag(t)] = float(np.max(np.hypot(diff[..., 0], diff[..., 1])))
        else:
            spreads[_time_tag(t)] = 0.0

    failed = [m.index for m in members if not m.ok]
    summary = {
        "count": ens.count,
        "failed_members": failed,
        "errors": {str(m.index): m.error for m in members if not m.ok},
        "snapshot_times": list(ens.snapshot_times),
        "snapshot_files": snapshot_files,
        "position_spread": spreads,
        "config_echo": config_to_dict(cfg, include_output_dir=False),
    }
    with open(os.path.join(target, "ensemble_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return EnsembleResult(out_dir=target, summary=summary)

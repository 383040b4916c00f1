"""Hybrid execution engine for the rolling-disk billiard.

An execution alternates exact free-flight arcs with discrete impact events:
flow until a rim point reaches the table edge, locate the crossing time,
apply the selected impact map, repeat.  Event location scans the exact flow
for a sign change of the boundary function and then bisects; because the
flow is closed form, no ODE event machinery is needed and the located times
are accurate to the bisection tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    BilliardError,
    InvalidStateError,
    SimultaneousImpactError,
)
from .geometry import kinetic_energy
from .impacts import ImpactOutcome, elastic_impact, plastic_impact, specular_reflect
from .penny import (
    PennyParams,
    PennyState,
    TableParams,
    closed_form_flow,
    closed_form_path,
    impact_chart,
    penny_constraints,
    penny_metric,
    penny_ode_rhs,
)

IMPACT_MODES = ("elastic", "plastic", "specular")

# Samples scanned per vectorized block during event detection.
_SCAN_BLOCK = 8192

# Bisection iteration cap; float64 brackets collapse long before this.
_BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class EngineOptions:
    """Execution controls.

    ``impact_mode`` selects the map applied at each event; ``restitution``
    only applies to the specular mode.  ``max_impacts`` is the Zeno guard:
    the run stops (without error) once that many velocity-changing impacts
    have occurred.  ``scan_dt`` is the bracketing step of the event scan and
    ``root_tol`` the bisection tolerance on the boundary function value;
    ``record_dt`` is the trace sampling interval.
    """

    impact_mode: str = "elastic"
    restitution: float = 1.0
    max_impacts: int = 20
    t_max: float = 200.0
    scan_dt: float = 1.0e-3
    root_tol: float = 1.0e-12
    record_dt: float = 1.0e-2

    def __post_init__(self) -> None:
        if self.impact_mode not in IMPACT_MODES:
            raise ValueError(f"impact_mode must be one of {IMPACT_MODES}, got {self.impact_mode!r}")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError(f"restitution must be in [0, 1], got {self.restitution}")
        if self.max_impacts < 1:
            raise ValueError(f"max_impacts must be >= 1, got {self.max_impacts}")
        if self.t_max <= 0.0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.scan_dt <= 0.0:
            raise ValueError(f"scan_dt must be positive, got {self.scan_dt}")
        if self.root_tol <= 0.0:
            raise ValueError(f"root_tol must be positive, got {self.root_tol}")
        if self.record_dt <= 0.0:
            raise ValueError(f"record_dt must be positive, got {self.record_dt}")


@dataclass(frozen=True)
class ImpactEvent:
    """One boundary event: time, side, velocity jump, and multiplier diagnostics."""

    time: float
    side: str
    pre_velocity: np.ndarray
    post_velocity: np.ndarray
    alpha: float
    lambdas: np.ndarray
    energy_before: float
    energy_after: float
    grazing: bool


@dataclass
class Arc:
    """A sampled continuous flow segment between two events."""

    t_start: float
    t_end: float
    state_start: PennyState
    times: list[float] = field(default_factory=list)
    states: list[PennyState] = field(default_factory=list)


@dataclass
class ExecutionTrace:
    """Alternating arcs and impact events plus the termination reason."""

    arcs: list[Arc] = field(default_factory=list)
    events: list[ImpactEvent] = field(default_factory=list)
    termination: str = ""
    error_message: Optional[str] = None

    def state_at(self, t: float, params: PennyParams) -> PennyState:
        """Exact state at time t, reconstructed from the covering arc."""
        for arc in self.arcs:
            if arc.t_start - 1.0e-12 <= t <= arc.t_end + 1.0e-12:
                return closed_form_flow(arc.state_start, t - arc.t_start, params)
        raise ValueError(f"time {t} is not covered by the recorded arcs")


def rk4_flow(state: PennyState, t: float, dt: float, params: PennyParams) -> PennyState:
    """Classical 4th-order integration of the free dynamics over [0, t].

    Cross-validation path for the closed-form flow; uses n = ceil(t/dt)
    equal steps.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t == 0.0:
        return state
    n = max(1, math.ceil(abs(t) / dt))
    h = t / n

    def rhs(yvec: np.ndarray) -> np.ndarray:
        s = PennyState(*yvec)
        return penny_ode_rhs(s, params)

    y = np.array(
        [state.x, state.y, state.theta, state.phi, state.xdot, state.ydot, state.thetadot, state.phidot]
    )
    for _ in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return PennyState(*y)


class _SideScan:
    """Per-side bookkeeping for the chunked boundary scan."""

    def __init__(self, side: str, h0: float, arm_tol: float):
        self.side = side
        self.armed = h0 < -arm_tol
        self.prev_t = 0.0
        self.prev_h = h0


def _h_arrays(
    state: PennyState, params: PennyParams, table: TableParams, ts: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Boundary function of both rim points along the exact flow, vectorized."""
    x, y, _, phi = closed_form_path(state, ts, params)
    off_x = params.R * np.cos(phi)
    off_y = params.R * np.sin(phi)
    return (
        np.asarray(table.h(x + off_x, y + off_y)),
        np.asarray(table.h(x - off_x, y - off_y)),
    )


def _scan_side(
    scan: _SideScan, ts: np.ndarray, hs: np.ndarray, arm_tol: float, escape_tol: float
) -> Optional[int]:
    """Advance one side through a chunk; return the crossing index if any."""
    if not scan.armed:
        below = np.flatnonzero(hs < -arm_tol)
        arm_idx = int(below[0]) if below.size else None
        check_until = arm_idx if arm_idx is not None else hs.size
        early = hs[:check_until]
        if early.size and float(np.max(early)) > escape_tol:
            raise InvalidStateError(
                f"trajectory left the table on the {scan.side} side without re-entering "
                "(near-grazing state the event scan cannot resolve)"
            )
        if arm_idx is None:
            scan.prev_t = float(ts[-1])
            scan.prev_h = float(hs[-1])
            return None
        scan.armed = True
        crossing = np.flatnonzero(hs[arm_idx:] >= 0.0)
        if crossing.size:
            return arm_idx + int(crossing[0])
    else:
        crossing = np.flatnonzero(hs >= 0.0)
        if crossing.size:
            return int(crossing[0])
    scan.prev_t = float(ts[-1])
    scan.prev_h = float(hs[-1])
    return None


def _bisect(hfun, lo: float, hi: float, root_tol: float) -> float:
    """Bisection for h(t) = 0 on a bracket with h(lo) < 0 <= h(hi)."""
    h_mid = None
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:  # bracket collapsed to adjacent floats
            break
        h_mid = hfun(mid)
        if abs(h_mid) < root_tol:
            return mid
        if h_mid < 0.0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if h_mid is None or abs(hfun(mid)) < 10.0 * root_tol:
        return mid
    raise InvalidStateError(
        f"bisection stalled: |H| = {abs(hfun(mid)):.3e} above tolerance {root_tol:.1e}"
    )


def find_next_impact(
    state: PennyState,
    table: TableParams,
    params: PennyParams,
    opts: EngineOptions,
    t_horizon: Optional[float] = None,
) -> Optional[tuple[float, str]]:
    """Earliest boundary crossing of either rim point within the horizon.

    Scans the exact flow with a step bounded so no rim point can move more
    than half a disk radius per sample, then bisects the bracketing step to
    ``|H| < root_tol``.  A state sitting on the boundary (just bounced) must
    first move inside before its side re-arms, which suppresses re-detection
    of the impact that produced it.  Returns ``(t_star, side)`` or ``None``
    when no crossing occurs before the horizon.
    """
    horizon = opts.t_max if t_horizon is None else t_horizon
    if horizon <= 0.0:
        return None
    charts = {side: impact_chart(table, params, side) for side in ("front", "back")}
    q0 = state.q
    h0 = {side: charts[side].h(q0) for side in ("front", "back")}
    worst = max(h0.values())
    if worst > opts.root_tol:
        raise InvalidStateError(f"state lies outside the table: max H = {worst:.3e}")

    vmax = params.R * (abs(state.thetadot) + abs(state.phidot))
    if vmax == 0.0:
        return None  # the disk does not move; H is constant and negative
    dt = min(opts.scan_dt, 0.5 * params.R / vmax)

    arm_tol = 10.0 * opts.root_tol
    escape_tol = max(100.0 * opts.root_tol, 1.0e-9)
    scans = {side: _SideScan(side, h0[side], arm_tol) for side in ("front", "back")}

    n_total = int(math.ceil(horizon / dt))
    k0 = 1
    while k0 <= n_total:
        k1 = min(k0 + _SCAN_BLOCK - 1, n_total)
        ts = dt * np.arange(k0, k1 + 1, dtype=float)
        ts[-1] = min(ts[-1], horizon)
        h_front, h_back = _h_arrays(state, params, table, ts)
        prev = {side: (scans[side].prev_t, scans[side].prev_h) for side in ("front", "back")}
        hits: dict[str, int] = {}
        for side, hs in (("front", h_front), ("back", h_back)):
            idx = _scan_side(scans[side], ts, hs, arm_tol, escape_tol)
            if idx is not None:
                hits[side] = idx

        if hits:
            best = min(hits.values())
            candidates = [side for side, idx in hits.items() if idx == best]
            roots = []
            for side in candidates:
                # A crossing at block index 0 brackets against the previous
                # block's final sample (or the start state for the first one).
                lo_t = prev[side][0] if best == 0 else float(ts[best - 1])
                hi_t = float(ts[best])

                def hfun(t: float, side=side) -> float:
                    return charts[side].h(closed_form_flow(state, t, params).q)

                roots.append((_bisect(hfun, lo_t, hi_t, opts.root_tol), side))
            roots.sort()
            if len(roots) == 2 and abs(roots[0][0] - roots[1][0]) <= opts.root_tol:
                raise SimultaneousImpactError(
                    f"front and back rim points cross at the same time t = {roots[0][0]:.12g}"
                )
            return roots[0]
        k0 = k1 + 1
    return None


def _apply_impact_map(
    boundary: PennyState, table: TableParams, params: PennyParams, opts: EngineOptions, side: str
) -> ImpactOutcome:
    metric = penny_metric(params)
    chart = impact_chart(table, params, side)
    if opts.impact_mode == "elastic":
        return elastic_impact(metric, penny_constraints(params), boundary.q, chart, boundary.v)
    if opts.impact_mode == "plastic":
        return plastic_impact(metric, penny_constraints(params), boundary.q, chart, boundary.v)
    return specular_reflect(metric, boundary.q, chart, boundary.v, e=opts.restitution)


def step(
    state: PennyState, table: TableParams, params: PennyParams, opts: EngineOptions
) -> tuple[PennyState, ImpactEvent]:
    """Flow to the next boundary crossing and apply the impact map once.

    Returns the post-impact state and the event record; the event time is
    relative to the given state.  Raises if no crossing occurs within t_max.
    """
    hit = find_next_impact(state, table, params, opts)
    if hit is None:
        raise InvalidStateError(f"no boundary crossing within t_max = {opts.t_max}")
    t_star, side = hit
    boundary = closed_form_flow(state, t_star, params)
    outcome = _apply_impact_map(boundary, table, params, opts, side)
    event = ImpactEvent(
        time=t_star,
        side=side,
        pre_velocity=boundary.v,
        post_velocity=outcome.post_velocity.copy(),
        alpha=outcome.multiplier_alpha,
        lambdas=outcome.multiplier_lambdas.copy(),
        energy_before=outcome.energy_before,
        energy_after=outcome.energy_after,
        grazing=outcome.grazing,
    )
    return boundary.with_velocity(outcome.post_velocity), event


def _sample_arc(
    state: PennyState, params: PennyParams, t_start: float, t_end: float, record_dt: float
) -> Arc:
    """Record a flow segment at record_dt spacing, endpoints included exactly."""
    duration = t_end - t_start
    n = int(math.floor(duration / record_dt + 1.0e-9))
    rel = [record_dt * k for k in range(n + 1)]
    if not rel or duration - rel[-1] > 1.0e-12 * max(1.0, duration):
        rel.append(duration)
    rel_arr = np.array(rel)
    x, y, theta, phi = closed_form_path(state, rel_arr, params)
    r_omega = params.R * state.thetadot
    xdot = r_omega * np.cos(phi)
    ydot = r_omega * np.sin(phi)
    arc = Arc(t_start=t_start, t_end=t_end, state_start=state)
    arc.times = [t_start + r for r in rel]
    arc.states = [
        PennyState(
            x=float(x[k]),
            y=float(y[k]),
            theta=float(theta[k]),
            phi=float(phi[k]),
            xdot=float(xdot[k]),
            ydot=float(ydot[k]),
            thetadot=state.thetadot,
            phidot=state.phidot,
        )
        for k in range(len(rel))
    ]
    return arc


def simulate(
    state0: PennyState, table: TableParams, params: PennyParams, opts: EngineOptions
) -> ExecutionTrace:
    """Run a full hybrid execution from a state strictly inside the table.

    Alternates exact flow and impacts until ``t_max`` or ``max_impacts``.
    Grazing contacts are recorded but change nothing and do not count toward
    the impact cap.  Impact-map failures (degeneracy, ambiguous double
    contact, non-physical solutions) terminate the trace with reason
    ``"error"`` instead of raising, so partial results remain usable.
    """
    charts = {side: impact_chart(table, params, side) for side in ("front", "back")}
    q0 = state0.q
    for side in ("front", "back"):
        h_val = charts[side].h(q0)
        if h_val >= 0.0:
            raise InvalidStateError(f"initial state is not strictly inside the table: H_{side} = {h_val:.3e}")
    state0.check_rolling(params)

    trace = ExecutionTrace()
    state = state0
    t_now = 0.0
    impact_count = 0
    event_cap = max(100, 10 * opts.max_impacts)  # guard against grazing floods

    while True:
        try:
            hit = find_next_impact(state, table, params, opts, t_horizon=opts.t_max - t_now)
        except BilliardError as exc:
            trace.termination = "error"
            trace.error_message = str(exc)
            break
        if hit is None:
            trace.arcs.append(_sample_arc(state, params, t_now, opts.t_max, opts.record_dt))
            trace.termination = "t_max"
            break
        t_rel, side = hit
        trace.arcs.append(_sample_arc(state, params, t_now, t_now + t_rel, opts.record_dt))
        boundary = closed_form_flow(state, t_rel, params)
        t_now += t_rel
        try:
            outcome = _apply_impact_map(boundary, table, params, opts, side)
            post_state = boundary.with_velocity(outcome.post_velocity)
            # The free flow is only defined on the rolling manifold; a
            # specular bounce that breaks the constraints cannot continue.
            post_state.check_rolling(params)
        except BilliardError as exc:
            trace.termination = "error"
            trace.error_message = str(exc)
            break
        trace.events.append(
            ImpactEvent(
                time=t_now,
                side=side,
                pre_velocity=boundary.v,
                post_velocity=outcome.post_velocity.copy(),
                alpha=outcome.multiplier_alpha,
                lambdas=outcome.multiplier_lambdas.copy(),
                energy_before=outcome.energy_before,
                energy_after=outcome.energy_after,
                grazing=outcome.grazing,
            )
        )
        state = post_state
        if not outcome.grazing:
            impact_count += 1
            if impact_count >= opts.max_impacts:
                trace.termination = "max_impacts"
                break
        if len(trace.events) >= event_cap:
            trace.termination = "max_impacts"
            break
    return trace


def trace_energy(trace: ExecutionTrace, params: PennyParams) -> np.ndarray:
    """Kinetic energy at every recorded arc sample, in trace order."""
    metric = penny_metric(params)
    values = []
    for arc in trace.arcs:
        for s in arc.states:
            values.append(kinetic_energy(metric, s.q, s.v))
    return np.array(values)

"""The vertical rolling disk ("penny") on an elliptical table.

Configuration is q = (x, y, theta, phi): contact-point position, rolling
angle, and heading.  Rolling without slipping ties the translational
velocity to the rolling rate, xdot = R thetadot cos(phi) and
ydot = R thetadot sin(phi).  The free dynamics keep thetadot and phidot
constant, so the flow has a closed form; front and back rim points hit the
table edge and trigger impacts.

Angles are stored unwrapped (plain reals, not mod 2*pi) so theta stays
continuous across impacts; all boundary functions only use trig of phi.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateChartError, InvalidStateError
from .geometry import ConstraintSet, MetricTensor, OneForm
from .impacts import ImpactChart

# |H| tolerance for treating a configuration as "on the boundary".
CONTACT_TOL = 1.0e-9

SIDES = ("front", "back")


@dataclass(frozen=True)
class PennyParams:
    """Disk parameters: radius R, mass m, and the two moments of inertia.

    ``I`` is about the axis perpendicular to the disk plane (rolling),
    ``J`` about an in-plane axis (steering).
    """

    R: float
    m: float
    I: float
    J: float

    def __post_init__(self) -> None:
        for name in ("R", "m", "I", "J"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @staticmethod
    def thin_disk(R: float = 0.01, m: float = 0.0025) -> "PennyParams":
        """Homogeneous thin disk: I = m R^2 / 2, J = m R^2 / 4.

        Defaults give a coin-sized disk (R = 1 cm, m = 2.5 g).
        """
        return PennyParams(R=R, m=m, I=0.5 * m * R * R, J=0.25 * m * R * R)


@dataclass(frozen=True)
class TableParams:
    """Elliptical table with semi-axes a (along x) and b (along y)."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if self.a <= 0.0 or self.b <= 0.0:
            raise ValueError(f"semi-axes must be positive, got a={self.a}, b={self.b}")

    def h(self, x, y):
        """Signed boundary function for the wall: x^2/a^2 + y^2/b^2 - 1."""
        return x * x / (self.a * self.a) + y * y / (self.b * self.b) - 1.0

    def grad_h(self, x, y):
        """Partials (h_x, h_y) of the boundary function."""
        return 2.0 * x / (self.a * self.a), 2.0 * y / (self.b * self.b)

    def check_clearance(self, params: PennyParams) -> None:
        """Warn when the disk is not small compared to the table."""
        if min(self.a, self.b) < 5.0 * params.R:
            warnings.warn(
                f"table semi-axes (a={self.a}, b={self.b}) are under 5 disk radii; "
                "the rim geometry leaves little room to roll",
                stacklevel=2,
            )


@dataclass(frozen=True)
class PennyState:
    """Configuration and velocity of the disk at one instant."""

    x: float
    y: float
    theta: float
    phi: float
    xdot: float
    ydot: float
    thetadot: float
    phidot: float

    @property
    def q(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, self.phi])

    @property
    def v(self) -> np.ndarray:
        return np.array([self.xdot, self.ydot, self.thetadot, self.phidot])

    def with_velocity(self, v) -> "PennyState":
        v = np.asarray(v, dtype=float)
        return replace(self, xdot=float(v[0]), ydot=float(v[1]), thetadot=float(v[2]), phidot=float(v[3]))

    def rolling_residuals(self, params: PennyParams) -> np.ndarray:
        """Residuals of the two rolling constraints (zero for valid states)."""
        return np.array(
            [
                self.xdot - params.R * self.thetadot * math.cos(self.phi),
                self.ydot - params.R * self.thetadot * math.sin(self.phi),
            ]
        )

    def check_rolling(self, params: PennyParams) -> None:
        tol = 1.0e-9 * (1.0 + abs(self.thetadot) * params.R)
        worst = float(np.max(np.abs(self.rolling_residuals(params))))
        if worst > tol:
            raise InvalidStateError(
                f"velocity violates the rolling constraints: residual {worst:.3e} > {tol:.3e}"
            )

    @staticmethod
    def from_rolling(
        x: float, y: float, theta: float, phi: float, Omega: float, omega: float, params: PennyParams
    ) -> "PennyState":
        """Build a constraint-consistent state from rolling rate Omega and heading rate omega."""
        return PennyState(
            x=x,
            y=y,
            theta=theta,
            phi=phi,
            xdot=params.R * Omega * math.cos(phi),
            ydot=params.R * Omega * math.sin(phi),
            thetadot=Omega,
            phidot=omega,
        )


def penny_metric(params: PennyParams) -> MetricTensor:
    """Kinetic-energy metric of the disk: diag(m, m, I, J)."""
    return MetricTensor.constant(np.diag([params.m, params.m, params.I, params.J]))


def penny_constraints(params: PennyParams) -> ConstraintSet:
    """The two rolling one-forms, (1, 0, -R cos phi, 0) and (0, 1, -R sin phi, 0)."""
    R = params.R

    def form_x(q: np.ndarray) -> np.ndarray:
        return np.array([1.0, 0.0, -R * math.cos(q[3]), 0.0])

    def form_y(q: np.ndarray) -> np.ndarray:
        return np.array([0.0, 1.0, -R * math.sin(q[3]), 0.0])

    return ConstraintSet(forms=(OneForm(eval=form_x), OneForm(eval=form_y)), dim=4)


def _sinc(z):
    """sin(z)/z, exact at z = 0 (numpy's sinc is normalized by pi)."""
    return np.sinc(z / np.pi)


def closed_form_flow(state0: PennyState, t: float, params: PennyParams) -> PennyState:
    """Exact free flight of the rolling disk for a time t (t may be negative).

    thetadot and phidot are constants of the motion; the contact point traces
    a circle of radius R*thetadot/phidot (a straight line as phidot -> 0).
    Evaluated in half-angle form, x - x0 = R Omega t sinc(w t / 2)
    cos(phi0 + w t / 2) and likewise for y, which is exact through the
    straight-line limit with no cancellation for small phidot.
    """
    state0.check_rolling(params)
    R = params.R
    Omega, omega = state0.thetadot, state0.phidot
    half = 0.5 * omega * t
    geom = R * Omega * t * float(_sinc(half))
    phi_t = state0.phi + omega * t
    return PennyState(
        x=state0.x + geom * math.cos(state0.phi + half),
        y=state0.y + geom * math.sin(state0.phi + half),
        theta=state0.theta + Omega * t,
        phi=phi_t,
        xdot=R * Omega * math.cos(phi_t),
        ydot=R * Omega * math.sin(phi_t),
        thetadot=Omega,
        phidot=omega,
    )


def closed_form_path(
    state0: PennyState, ts: np.ndarray, params: PennyParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized free flight: arrays (x, y, theta, phi) at the given times."""
    ts = np.asarray(ts, dtype=float)
    R = params.R
    Omega, omega = state0.thetadot, state0.phidot
    half = 0.5 * omega * ts
    geom = R * Omega * ts * _sinc(half)
    x = state0.x + geom * np.cos(state0.phi + half)
    y = state0.y + geom * np.sin(state0.phi + half)
    theta = state0.theta + Omega * ts
    phi = state0.phi + omega * ts
    return x, y, theta, phi


def penny_ode_rhs(state: PennyState, params: PennyParams) -> np.ndarray:
    """Time derivative of (x, y, theta, phi, xdot, ydot, thetadot, phidot).

    The angular accelerations vanish; the translational accelerations come
    from differentiating the rolling constraints.
    """
    R = params.R
    acc_x = -R * state.thetadot * state.phidot * math.sin(state.phi)
    acc_y = R * state.thetadot * state.phidot * math.cos(state.phi)
    return np.array(
        [state.xdot, state.ydot, state.thetadot, state.phidot, acc_x, acc_y, 0.0, 0.0]
    )


def contact_points(state: PennyState, params: PennyParams) -> tuple[np.ndarray, np.ndarray]:
    """Front and back rim points, (x, y) +- R (cos phi, sin phi)."""
    off = params.R * np.array([math.cos(state.phi), math.sin(state.phi)])
    center = np.array([state.x, state.y])
    return center + off, center - off


def _side_sign(side: str) -> float:
    if side == "front":
        return 1.0
    if side == "back":
        return -1.0
    raise ValueError(f"side must be 'front' or 'back', got {side!r}")


def impact_chart(table: TableParams, params: PennyParams, side: str) -> ImpactChart:
    """Boundary chart on the 4-dim configuration space for one rim point.

    H(q) is the table function evaluated at the front (+) or back (-) rim
    point; its differential picks up a phi component R (h_y cos phi -
    h_x sin phi), sign-flipped on the back side.
    """
    s = _side_sign(side)
    R = params.R

    def h(q: np.ndarray) -> float:
        cx = q[0] + s * R * math.cos(q[3])
        cy = q[1] + s * R * math.sin(q[3])
        return float(table.h(cx, cy))

    def dh(q: np.ndarray) -> np.ndarray:
        cphi, sphi = math.cos(q[3]), math.sin(q[3])
        cx = q[0] + s * R * cphi
        cy = q[1] + s * R * sphi
        hx, hy = table.grad_h(cx, cy)
        return np.array([hx, hy, 0.0, s * R * (hy * cphi - hx * sphi)])

    return ImpactChart(h=h, dh=dh)


def penny_preimpact_map(
    state: PennyState, table: TableParams, params: PennyParams, side: str
) -> np.ndarray:
    """Explicit unconstrained bounce of the disk at the table edge.

    Closed-form counterpart of ``specular_reflect`` at e=1 on the rim chart:
    the translational velocity jumps along (h_x, h_y)/m, the heading rate by
    the torque-like combination R (h_y cos phi - h_x sin phi)/J, and the
    rolling rate thetadot is unchanged (the no-slip constraint is not yet
    imposed here).  Used as an independent cross-check of the generic path.
    """
    s = _side_sign(side)
    R, m, J = params.R, params.m, params.J
    cphi, sphi = math.cos(state.phi), math.sin(state.phi)
    cx = state.x + s * R * cphi
    cy = state.y + s * R * sphi
    H = float(table.h(cx, cy))
    if abs(H) > CONTACT_TOL:
        raise InvalidStateError(f"{side} rim point is not on the boundary: H = {H:.3e}")
    hx, hy = table.grad_h(cx, cy)
    twist = s * R * (hy * cphi - hx * sphi)
    denom = (hx * hx + hy * hy) / m + twist * twist / J
    if denom == 0.0:
        raise DegenerateChartError("boundary differential vanishes at the rim point")
    C = -2.0 * (hx * state.xdot + hy * state.ydot + twist * state.phidot) / denom
    return np.array(
        [
            state.xdot + (C / m) * hx,
            state.ydot + (C / m) * hy,
            state.thetadot,
            state.phidot + (C / J) * twist,
        ]
    )


def penny_projection_matrix(state: PennyState, params: PennyParams) -> np.ndarray:
    """4x4 matrix of the g-orthogonal projection onto the rolling distribution.

    Block closed form in coordinates (xdot, ydot, thetadot, phidot), scaled
    by 1/(I + m R^2); agrees with the generic Gram-matrix projection.
    """
    R, m, I = params.R, params.m, params.I
    c, s = math.cos(state.phi), math.sin(state.phi)
    scale = I + m * R * R
    top_left = m * R * R * np.array([[c * c, s * c], [s * c, s * s]])
    top_right = I * R * np.array([[c, 0.0], [s, 0.0]])
    bottom_left = m * R * np.array([[c, s], [0.0, 0.0]])
    bottom_right = np.array([[I, 0.0], [0.0, scale]])
    return np.block([[top_left, top_right], [bottom_left, bottom_right]]) / scale

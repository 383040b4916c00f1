"""Impact maps at the billiard boundary.

Three maps are provided:

* ``specular_reflect`` -- the unconstrained bounce with a coefficient of
  restitution: the momentum jump is along dh and, at e=1, kinetic energy is
  conserved (corner conditions of the underlying variational principle).
* ``elastic_impact`` -- the constrained analogue: the momentum jump lies in
  the span of the constraint forms and dh, energy is conserved, and the
  post-impact velocity satisfies the constraints.  Solved via multipliers.
* ``plastic_impact`` -- the e=1 specular bounce followed by the g-orthogonal
  projection onto the constraint distribution; dissipates energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DegenerateChartError,
    ImpactPreconditionError,
    NonPhysicalImpactError,
)
from .geometry import (
    ConstraintSet,
    ElasticSolution,
    MetricTensor,
    _check_independent,
    _matrix_at,
    _point,
    _solve_spd,
    _vector,
    kinetic_energy,
)

# |dh(v)| below this (times |v| |dh|) classifies the contact as grazing: the
# multiplier system only admits the zero solution and velocity is unchanged.
GRAZING_RTOL = 1.0e-10

# Pre-impact constraint residual tolerance (relative to |v|).  Violations are
# errors, not silently projected away: silent repair would mask flow bugs.
CONSTRAINT_IN_RTOL = 1.0e-9

# Post-impact dh(v+) must be <= this (times |v+| |dh|) when the arrival was
# outgoing, i.e. the bounce must leave the velocity pointing inward/tangent.
EXIT_RTOL = 1.0e-12


@dataclass(frozen=True)
class ImpactChart:
    """Scalar boundary function h with differential dh; interior is {h < 0}."""

    h: Callable[[np.ndarray], float]
    dh: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ImpactOutcome:
    """Result of one impact-map application, with multiplier diagnostics."""

    post_velocity: np.ndarray
    multiplier_alpha: float
    multiplier_lambdas: np.ndarray
    energy_before: float
    energy_after: float
    grazing: bool


def _chart_covector(metric: MetricTensor, chart: ImpactChart, q: np.ndarray) -> np.ndarray:
    dh = np.asarray(chart.dh(q), dtype=float)
    if dh.shape != (metric.dim,):
        raise ValueError(f"dh has shape {dh.shape}, expected ({metric.dim},)")
    if not np.any(dh):
        raise DegenerateChartError("dh vanishes at the impact configuration")
    return dh


def _is_grazing(rate: float, v: np.ndarray, dh: np.ndarray) -> bool:
    return abs(rate) < GRAZING_RTOL * np.linalg.norm(v) * np.linalg.norm(dh)


def _unchanged(metric: MetricTensor, q: np.ndarray, v: np.ndarray, m: int) -> ImpactOutcome:
    energy = kinetic_energy(metric, q, v)
    return ImpactOutcome(
        post_velocity=v.copy(),
        multiplier_alpha=0.0,
        multiplier_lambdas=np.zeros(m),
        energy_before=energy,
        energy_after=energy,
        grazing=True,
    )


def _check_inward(rate_in: float, rate_out: float, v_post: np.ndarray, dh: np.ndarray) -> None:
    # Only enforced for an outgoing arrival; running the map in reverse time
    # (inward arrival) legitimately produces an outgoing velocity.
    if rate_in > 0.0 and rate_out > EXIT_RTOL * np.linalg.norm(v_post) * np.linalg.norm(dh):
        raise NonPhysicalImpactError(
            f"post-impact velocity still exits the boundary: dh(v+) = {rate_out:.3e}"
        )


def specular_reflect(metric: MetricTensor, q, chart: ImpactChart, v, e: float = 1.0) -> ImpactOutcome:
    """Reflect a velocity off the boundary with restitution e in [0, 1].

    The post-impact velocity is ``v - (1+e) (dh(v) / <dh,dh>) grad h`` where
    ``grad h`` is the sharped differential.  e=1 conserves kinetic energy;
    e=0 lands in the kernel of dh (pure normal absorption).
    """
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"restitution must be in [0, 1], got {e}")
    q = _point(metric, q)
    v = _vector(metric, v, "velocity")
    dh = _chart_covector(metric, chart, q)
    g = _matrix_at(metric, q)
    grad_h = _solve_spd(g, dh)
    denom = float(dh @ grad_h)          # cometric norm <dh, dh>
    rate = float(dh @ v)
    energy_before = 0.5 * float(v @ g @ v)
    if _is_grazing(rate, v, dh):
        return _unchanged(metric, q, v, 0)
    alpha = -(1.0 + e) * rate / denom
    v_post = v + alpha * grad_h
    return ImpactOutcome(
        post_velocity=v_post,
        multiplier_alpha=alpha,
        multiplier_lambdas=np.zeros(0),
        energy_before=energy_before,
        energy_after=0.5 * float(v_post @ g @ v_post),
        grazing=False,
    )


def _check_preimpact_constraints(omega: np.ndarray, v: np.ndarray) -> None:
    if omega.shape[0] == 0:
        return
    tol = CONSTRAINT_IN_RTOL * np.linalg.norm(v)
    residuals = omega @ v
    worst = float(np.max(np.abs(residuals))) if residuals.size else 0.0
    if worst > tol:
        raise ImpactPreconditionError(
            f"pre-impact velocity violates constraints: max residual {worst:.3e} > {tol:.3e}"
        )


def solve_elastic_system(
    metric: MetricTensor, constraints: ConstraintSet, q, dh, v
) -> ElasticSolution:
    """Solve the elastic multiplier system at a boundary configuration.

    Unknowns are the constraint multipliers and the boundary multiplier; the
    momentum jump is their combination, the post velocity annihilates every
    constraint form, and kinetic energy is conserved.  Eliminating the
    constraint multipliers (linear in alpha) leaves a quadratic in alpha with
    zero as one root; the other root is returned.  A vanishing second root
    means the contact is tangential and is reported as grazing.
    """
    q = _point(metric, q)
    v = _vector(metric, v, "velocity")
    dh = _vector(metric, np.asarray(dh, dtype=float), "dh")
    omega = constraints.matrix_at(q)
    m = constraints.m

    stacked = np.vstack([omega, dh[None, :]])
    _check_independent(stacked, "constraint one-forms together with dh")

    g = _matrix_at(metric, q)
    # Cometric Gram matrix of all m+1 covectors in one solve.
    gram = stacked @ _solve_spd(g, stacked.T)
    gram = 0.5 * (gram + gram.T)
    a_upper = gram[:m, :m]
    b = gram[:m, m]                      # <omega^k, dh>
    q_dd = gram[m, m]                    # <dh, dh>
    c = omega @ v                        # <p-, omega^k>, kept in general form
    d0 = float(dh @ v)                   # <p-, dh> = dh(v)

    if _is_grazing(d0, v, dh):
        return ElasticSolution(alpha=0.0, lambdas=np.zeros(m), post_velocity=v.copy(), grazing=True)

    if m:
        u = -np.linalg.solve(a_upper, b)     # lambdas = alpha * u
        lin = 2.0 * (float(c @ u) + d0)
        quad = float(u @ a_upper @ u) + 2.0 * float(u @ b) + q_dd
    else:
        u = np.zeros(0)
        lin = 2.0 * d0
        quad = q_dd
    # quad is the squared cometric norm of dh minus its component along the
    # constraint forms; joint independence makes it strictly positive.
    alpha = -lin / quad
    lambdas = alpha * u

    p_post = g @ v + (omega.T @ lambdas if m else 0.0) + alpha * dh
    v_post = _solve_spd(g, p_post)
    return ElasticSolution(alpha=alpha, lambdas=lambdas, post_velocity=v_post, grazing=False)


def elastic_impact(
    metric: MetricTensor, constraints: ConstraintSet, q, chart: ImpactChart, v
) -> ImpactOutcome:
    """Energy-conserving impact compatible with the constraints.

    The momentum jump lies in the span of the constraint forms and dh; the
    multipliers solve the conservation system.  With no constraints this
    reduces exactly to ``specular_reflect`` at e=1.  Raises if the arrival
    velocity violates the constraints, if the forms and dh are dependent, or
    if the solution still exits the boundary.
    """
    q = _point(metric, q)
    v = _vector(metric, v, "velocity")
    dh = _chart_covector(metric, chart, q)
    omega = constraints.matrix_at(q)
    _check_preimpact_constraints(omega, v)

    solution = solve_elastic_system(metric, constraints, q, dh, v)
    if solution.grazing:
        return _unchanged(metric, q, v, constraints.m)

    rate_in = float(dh @ v)
    rate_out = float(dh @ solution.post_velocity)
    _check_inward(rate_in, rate_out, solution.post_velocity, dh)

    return ImpactOutcome(
        post_velocity=solution.post_velocity,
        multiplier_alpha=solution.alpha,
        multiplier_lambdas=solution.lambdas,
        energy_before=kinetic_energy(metric, q, v),
        energy_after=kinetic_energy(metric, q, solution.post_velocity),
        grazing=False,
    )


def plastic_impact(
    metric: MetricTensor, constraints: ConstraintSet, q, chart: ImpactChart, v
) -> ImpactOutcome:
    """e=1 specular bounce followed by projection onto the distribution.

    The projection removes the constraint-violating part of the reflected
    velocity; the removed component is g-orthogonal to the distribution, so
    kinetic energy never increases.  Reduces to ``specular_reflect`` at e=1
    when there are no constraints.
    """
    q = _point(metric, q)
    v = _vector(metric, v, "velocity")
    dh = _chart_covector(metric, chart, q)
    omega = constraints.matrix_at(q)
    _check_preimpact_constraints(omega, v)
    stacked = np.vstack([omega, dh[None, :]])
    _check_independent(stacked, "constraint one-forms together with dh")

    m = constraints.m
    rate_in = float(dh @ v)
    if _is_grazing(rate_in, v, dh):
        return _unchanged(metric, q, v, m)

    g = _matrix_at(metric, q)
    grad_h = _solve_spd(g, dh)
    denom = float(dh @ grad_h)
    alpha = -2.0 * rate_in / denom
    v_mid = v + alpha * grad_h           # unconstrained e=1 bounce

    if m:
        w = _solve_spd(g, omega.T)       # columns W^j
        a_upper = omega @ w
        coeffs = np.linalg.solve(0.5 * (a_upper + a_upper.T), omega @ v_mid)
        v_post = v_mid - w @ coeffs
        lambdas = -coeffs                # momentum correction is lambdas_j omega^j
    else:
        v_post = v_mid
        lambdas = np.zeros(0)

    rate_out = float(dh @ v_post)
    _check_inward(rate_in, rate_out, v_post, dh)

    return ImpactOutcome(
        post_velocity=v_post,
        multiplier_alpha=alpha,
        multiplier_lambdas=lambdas,
        energy_before=0.5 * float(v @ g @ v),
        energy_after=0.5 * float(v_post @ g @ v_post),
        grazing=False,
    )

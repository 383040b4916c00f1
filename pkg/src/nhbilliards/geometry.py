"""Kinetic-energy geometry on configuration space.

Metric and cometric operations, the musical isomorphisms between velocities
and momenta, constraint one-forms, their Gram matrices, and the orthogonal
projection onto the constraint distribution.  Everything is a pure function
of immutable values; SI units throughout, angles in radians.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConstraintDegeneracyError, NumericalError

# Condition-number guard for metric solves.  Configuration spaces in this
# domain are tiny (n <= ~10), so a dense factorization is always fine and
# robustness beats sparsity.
COND_LIMIT = 1.0e12

# Relative singular-value threshold below which a set of covectors is
# treated as linearly dependent.
INDEPENDENCE_RTOL = 1.0e-10


@dataclass(frozen=True)
class MetricTensor:
    """Riemannian kinetic-energy metric g over an n-dimensional space.

    ``eval`` maps a configuration point (length-``dim`` array) to the
    ``dim x dim`` symmetric positive-definite matrix g(q).
    """

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError(f"metric dimension must be positive, got {self.dim}")

    @staticmethod
    def constant(matrix) -> "MetricTensor":
        """Metric that is the same matrix at every configuration."""
        mat = np.array(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"metric matrix must be square, got shape {mat.shape}")
        mat.setflags(write=False)
        return MetricTensor(dim=mat.shape[0], eval=lambda q: mat)

    @staticmethod
    def identity(dim: int) -> "MetricTensor":
        return MetricTensor.constant(np.eye(dim))


@dataclass(frozen=True)
class OneForm:
    """A field of covectors; ``eval`` maps a configuration to a length-n row."""

    eval: Callable[[np.ndarray], np.ndarray]

    @staticmethod
    def constant(row) -> "OneForm":
        r = np.array(row, dtype=float)
        r.setflags(write=False)
        return OneForm(eval=lambda q: r)


@dataclass(frozen=True)
class ConstraintSet:
    """m linearly independent constraint one-forms on an n-dim space (m < n).

    The allowed velocities at q are the common kernel of the forms.
    """

    forms: tuple[OneForm, ...]
    dim: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "forms", tuple(self.forms))
        if len(self.forms) >= self.dim:
            raise ValueError(
                f"need fewer constraints than dimensions, got m={len(self.forms)}, n={self.dim}"
            )

    @property
    def m(self) -> int:
        return len(self.forms)

    @staticmethod
    def empty(dim: int) -> "ConstraintSet":
        return ConstraintSet(forms=(), dim=dim)

    def matrix_at(self, q: np.ndarray) -> np.ndarray:
        """Stack the covectors at q into an (m, n) matrix."""
        if self.m == 0:
            return np.zeros((0, self.dim))
        rows = [np.asarray(form.eval(q), dtype=float) for form in self.forms]
        mat = np.vstack(rows)
        if mat.shape != (self.m, self.dim):
            raise ValueError(f"constraint rows have shape {mat.shape}, expected {(self.m, self.dim)}")
        return mat


@dataclass(frozen=True)
class ElasticSolution:
    """Multipliers and post-impact velocity of the elastic impact system.

    ``grazing`` marks a tangential contact: the only admissible multiplier
    is zero and the velocity passes through unchanged.
    """

    alpha: float
    lambdas: np.ndarray
    post_velocity: np.ndarray
    grazing: bool


def _point(metric: MetricTensor, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (metric.dim,):
        raise ValueError(f"configuration has shape {q.shape}, expected ({metric.dim},)")
    return q


def _vector(metric: MetricTensor, v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (metric.dim,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({metric.dim},)")
    return v


def _matrix_at(metric: MetricTensor, q: np.ndarray) -> np.ndarray:
    g = np.asarray(metric.eval(q), dtype=float)
    if g.shape != (metric.dim, metric.dim):
        raise ValueError(f"metric evaluated to shape {g.shape}, expected square of dim {metric.dim}")
    return g


def _solve_spd(g: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve g x = rhs with a condition-number guard."""
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalError(f"metric condition number {cond:.3e} exceeds {COND_LIMIT:.1e}")
    return np.linalg.solve(g, rhs)


def flat(metric: MetricTensor, q, v) -> np.ndarray:
    """Lower an index: velocity -> momentum covector, p = g(q) v."""
    q = _point(metric, q)
    v = _vector(metric, v, "velocity")
    return _matrix_at(metric, q) @ v


def sharp(metric: MetricTensor, q, p) -> np.ndarray:
    """Raise an index: momentum covector -> velocity, by solving g(q) v = p."""
    q = _point(metric, q)
    p = _vector(metric, p, "covector")
    return _solve_spd(_matrix_at(metric, q), p)


def cometric_inner(metric: MetricTensor, q, p1, p2) -> float:
    """Cometric pairing of two covectors, p1 . g(q)^-1 . p2."""
    q = _point(metric, q)
    p1 = _vector(metric, p1, "covector p1")
    p2 = _vector(metric, p2, "covector p2")
    return float(p1 @ _solve_spd(_matrix_at(metric, q), p2))


def kinetic_energy(metric: MetricTensor, q, v) -> float:
    """Kinetic energy 1/2 v . g(q) v (joules)."""
    q = _point(metric, q)
    v = _vector(metric, v, "velocity")
    return 0.5 * float(v @ _matrix_at(metric, q) @ v)


def _check_independent(stacked: np.ndarray, what: str) -> None:
    if stacked.shape[0] == 0:
        return
    svals = np.linalg.svd(stacked, compute_uv=False)
    if svals[-1] <= INDEPENDENCE_RTOL * svals[0]:
        raise ConstraintDegeneracyError(
            f"{what} are linearly dependent (singular values {svals[0]:.3e} .. {svals[-1]:.3e})"
        )


def gram_matrices(constraints: ConstraintSet, metric: MetricTensor, q) -> tuple[np.ndarray, np.ndarray]:
    """Cometric Gram matrix of the constraint forms and its inverse.

    Returns ``(a_upper, a_lower)`` where ``a_upper[i, j]`` is the cometric
    pairing of form i with form j and ``a_lower`` is its inverse.  Both are
    symmetric positive definite for independent constraints.
    """
    q = _point(metric, q)
    omega = constraints.matrix_at(q)
    if constraints.m == 0:
        empty = np.zeros((0, 0))
        return empty, empty
    _check_independent(omega, "constraint one-forms")
    g = _matrix_at(metric, q)
    a_upper = omega @ _solve_spd(g, omega.T)
    a_upper = 0.5 * (a_upper + a_upper.T)  # symmetrize roundoff
    try:
        a_lower = np.linalg.inv(a_upper)
    except np.linalg.LinAlgError as exc:
        raise ConstraintDegeneracyError(f"constraint Gram matrix is singular: {exc}") from exc
    return a_upper, 0.5 * (a_lower + a_lower.T)


def project_onto_distribution(constraints: ConstraintSet, metric: MetricTensor, q, v) -> np.ndarray:
    """g-orthogonal projection of a velocity onto the constraint distribution.

    The result annihilates every constraint form; the removed component is
    g-orthogonal to the distribution, so kinetic energy can only decrease.
    """
    q = _point(metric, q)
    v = _vector(metric, v, "velocity")
    if constraints.m == 0:
        return v.copy()
    omega = constraints.matrix_at(q)
    _check_independent(omega, "constraint one-forms")
    g = _matrix_at(metric, q)
    w = _solve_spd(g, omega.T)          # columns are the sharped forms W^j
    a_upper = omega @ w
    coeffs = np.linalg.solve(0.5 * (a_upper + a_upper.T), omega @ v)
    return v - w @ coeffs

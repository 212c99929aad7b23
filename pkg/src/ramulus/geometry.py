"""Euclidean primitives: points, angles, branching angles, cone balance.

Points are plain numpy arrays of shape ``(d,)``.  Everything in this module
is pure and stateless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleAngleError

# Absolute tolerance for angle comparisons, in radians.  arccos is badly
# conditioned near 0 and pi, so nothing tighter is meaningful in double
# precision.
ANGLE_TOL = 1e-9

# Cosine arguments within CLAMP_TOL of +-1 are clamped; anything further out
# is reported as infeasible rather than silently clamped.
CLAMP_TOL = 1e-12

UNIT_TOL = 1e-12


def as_point(x) -> np.ndarray:
    """Coerce ``x`` to a finite 1-d float array."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise DomainError(f"point must be a 1-d coordinate array, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise DomainError("point coordinates must be finite")
    return p


@dataclass(frozen=True)
class ConeRay:
    """A unit direction out of a cone vertex carrying a signed mass flow.

    ``multiplicity`` is the flow along the ray oriented away from the vertex;
    negative values mean mass flowing into the vertex from that direction.
    """

    direction: np.ndarray
    multiplicity: float

    def __post_init__(self):
        d = as_point(self.direction)
        n = float(np.linalg.norm(d))
        if abs(n - 1.0) > UNIT_TOL:
            raise DomainError(f"ray direction must be unit length, |d| = {n!r}")
        if self.multiplicity == 0:
            raise DomainError("ray multiplicity must be nonzero")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "multiplicity", float(self.multiplicity))


def angle_between(u, v) -> float:
    """Angle in [0, pi] between two nonzero vectors."""
    u = as_point(u)
    v = as_point(v)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DomainError("angle_between requires nonzero vectors")
    c = float(np.dot(u, v)) / (nu * nv)
    c = min(1.0, max(-1.0, c))
    return math.acos(c)


def _checked_acos(c: float, what: str) -> float:
    if c > 1.0 + CLAMP_TOL or c < -1.0 - CLAMP_TOL:
        raise InfeasibleAngleError(
            f"{what} = {c!r} lies outside [-1, 1]: Y-branch is not locally optimal"
        )
    return math.acos(min(1.0, max(-1.0, c)))


def branch_angles(a1: float, a2: float, alpha: float) -> tuple[float, float, float]:
    """Optimal Y-junction angles for two flows a1, a2 merging into a1 + a2.

    Returns ``(theta1, theta2, theta12)``: the angles each incoming edge makes
    with the extension of the outgoing edge, plus the full opening angle.
    Only the mass fractions k_i = a_i / (a1 + a2) enter, so the result is
    scale invariant.
    """
    if not (a1 > 0 and a2 > 0):
        raise DomainError("branch_angles requires positive masses")
    if not (0.0 <= alpha < 1.0):
        raise DomainError(f"alpha must lie in [0, 1), got {alpha!r}")
    k1 = a1 / (a1 + a2)
    k2 = a2 / (a1 + a2)
    p1 = k1**alpha
    p2 = k2**alpha
    c1 = (p1 * p1 + 1.0 - p2 * p2) / (2.0 * p1)
    c2 = (p2 * p2 + 1.0 - p1 * p1) / (2.0 * p2)
    c12 = (1.0 - p1 * p1 - p2 * p2) / (2.0 * p1 * p2)
    theta1 = _checked_acos(c1, "cos(theta1)")
    theta2 = _checked_acos(c2, "cos(theta2)")
    theta12 = _checked_acos(c12, "cos(theta1+theta2)")
    return theta1, theta2, theta12


def cone_balance_residual(rays, alpha: float) -> tuple[float, np.ndarray]:
    """Mass and direction residuals of a cone of weighted rays.

    A cone is first-order optimal iff both residuals vanish: the signed
    multiplicities sum to zero and the |m|^alpha-weighted outward directions
    cancel.  The direction residual is exactly the gradient, with respect to
    the vertex position, of the truncated cone's alpha-mass (up to sign).
    """
    rays = list(rays)
    if not rays:
        raise DomainError("cone_balance_residual requires at least one ray")
    mass_residual = 0.0
    direction_residual = np.zeros_like(rays[0].direction)
    for r in rays:
        if not isinstance(r, ConeRay):
            r = ConeRay(*r)
        mass_residual += r.multiplicity
        direction_residual = direction_residual + abs(r.multiplicity) ** alpha * r.direction
    return mass_residual, direction_residual

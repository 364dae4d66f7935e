"""Contact models: relaxed penalty forces and velocity reflection.

Two variants, matching how the benchmark scenes resolve contacts:

* penalty -- a spring-damper normal force plus Coulomb-style tangential
  friction, accumulated into the force balance while penetration persists;
* reflection -- an instantaneous velocity update that flips (or, with zero
  restitution, removes) the normal velocity component.

All branch tests (in contact or not, approaching or not) run on primal values,
so these models are differentiable within each contact branch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import duals as ds


@dataclass(frozen=True)
class PenaltyContact:
    stiffness: float = 1.0e4   # N/m
    damping: float = 10.0      # N*s/m on the normal relative speed
    friction: float = 0.0      # Coulomb coefficient on the normal force

    def __post_init__(self):
        if self.stiffness < 0 or self.damping < 0 or self.friction < 0:
            raise ValueError("penalty contact coefficients must be non-negative")


@dataclass(frozen=True)
class ReflectionContact:
    restitution: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError("restitution must lie in [0, 1]")


def penalty_normal_force(penetration, normal_velocity, model: PenaltyContact):
    """Spring-damper force along the contact normal, clamped non-adhesive.

    ``penetration`` > 0 means overlap; ``normal_velocity`` > 0 means separating.
    """
    raw = model.stiffness * penetration - model.damping * normal_velocity
    force = ds.maximum(raw, 0.0)
    return ds.where(ds.value(penetration) > 0.0, force, force * 0.0)


def penalty_friction_force(normal_force, tangential_velocity, model: PenaltyContact):
    """Coulomb friction opposing tangential slip; sign taken from the primal."""
    slip_sign = np.sign(ds.value(tangential_velocity))
    return normal_force * (-model.friction * slip_sign)


def reflect_normal_velocity(velocity, normal: np.ndarray, model: ReflectionContact,
                            active=None):
    """Remove/flip the normal velocity component: v' = v - (1+e)(v.n)n.

    ``active`` masks which rows (particles) reflect; inactive rows pass
    through untouched. ``normal`` may be a constant array or a Dual.
    """
    vn = ds.dsum(velocity * normal, axis=-1)
    impulse = ds.expand(vn, -1) * normal * (1.0 + model.restitution)
    reflected = velocity - impulse
    if active is None:
        return reflected
    return ds.where(np.asarray(active)[..., None], reflected, velocity)


def closest_point_param(center, p0, p1):
    """Clamped projection parameter t in [0, 1] of a point onto segment p0-p1."""
    axis = p1 - p0
    length_sq = ds.dsum(axis * axis, axis=-1)
    t = ds.dsum((center - p0) * axis, axis=-1) / length_sq
    return ds.minimum(ds.maximum(t, 0.0), 1.0)


def segment_gap(center, radius: float, p0, p1):
    """Signed gap, unit normal and closest point for a disc vs a segment.

    Gap < 0 means the disc overlaps the segment. The normal points from the
    segment toward the disc center.
    """
    t = closest_point_param(center, p0, p1)
    closest = p0 + ds.expand(t, -1) * (p1 - p0)
    offset = center - closest
    dist = ds.sqrt(ds.dsum(offset * offset, axis=-1))
    normal = offset / ds.expand(dist, -1)
    return dist - radius, normal, closest

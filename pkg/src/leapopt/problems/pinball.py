"""Ball drop through a grid of rotatable segment colliders.

A ball falls inside an 8 m x 10 m walled platform onto an n_h x n_w grid of
pin-mounted segments; each segment's rotation angle is one optimization
parameter. All contacts reflect the velocity about the contact normal with
restitution 0.8 and project the ball out of penetration. The loss is the
distance of the final ball position to a target near the bottom-right corner.

Because a collider only influences the trajectory when touched, the gradient
with respect to an untouched collider's angle is exactly zero: untouched
parameters never enter the computation except through branch predicates,
which are evaluated on primal values.
"""
from __future__ import annotations

import numpy as np

from ..core import Bounds
from ..diffsim import duals as ds
from ..diffsim.contact import ReflectionContact, closest_point_param, segment_gap
from .base import Problem

WIDTH = 8.0
HEIGHT = 10.0
GRAVITY = 9.8
BALL_RADIUS = 0.2
HALF_LENGTH = 0.6
DROP = np.array([2.0, 9.5])
TARGET = np.array([6.5, 0.3])
CONTACT = ReflectionContact(restitution=0.8)

# Walls as constant segments: left, right, floor, ceiling.
WALL_P0 = np.array([[0.0, 0.0], [WIDTH, 0.0], [0.0, 0.0], [0.0, HEIGHT]])
WALL_P1 = np.array([[0.0, HEIGHT], [WIDTH, HEIGHT], [WIDTH, 0.0], [WIDTH, HEIGHT]])


def collider_pivots(n_h: int, n_w: int) -> np.ndarray:
    """Pivot grid positions, row-major with row 0 nearest the drop point."""
    xs = WIDTH * (np.arange(n_w) + 1.0) / (n_w + 1.0)
    ys = HEIGHT * (n_h - np.arange(n_h)) / (n_h + 1.0)
    return np.array([[x, y] for y in ys for x in xs])


class PinballProblem(Problem):
    def __init__(self, n_h: int, n_w: int, dt: float = 1.0e-2, steps: int = 300,
                 target=TARGET):
        if n_h * n_w < 1:
            raise ValueError("collider grid must contain at least one collider")
        self.n_h, self.n_w = n_h, n_w
        self.name = f"pinball-{n_h * n_w}"
        self.dt = dt
        self.steps = steps
        self.target = np.asarray(target, dtype=float)
        self.pivots = collider_pivots(n_h, n_w)
        n = len(self.pivots)
        self._bounds = Bounds(np.full(n, -np.pi / 2), np.full(n, np.pi / 2))

    @property
    def bounds(self) -> Bounds:
        return self._bounds

    def _rollout(self, angles):
        """Integrate the drop; returns final position and per-step contact ids.

        Per step, column 0 holds the contact id (-1 free flight, 0..n-1
        collider index, n..n+3 wall index) and column 1 the hit segment's
        closest-point regime (0 interior, 1 and 2 the two endpoint caps), so
        the pair pins down the active smooth branch.
        """
        n = len(self.pivots)
        num_params = angles.num_params
        axis = ds.stack([ds.cos(angles), ds.sin(angles)], axis=-1) * HALF_LENGTH
        p0 = ds.concat([self.pivots - axis, WALL_P0])
        p1 = ds.concat([self.pivots + axis, WALL_P1])
        pos = ds.Dual(DROP, np.zeros((2, num_params)))
        vel = ds.Dual(np.zeros(2), np.zeros((2, num_params)))
        gravity_step = np.array([0.0, -GRAVITY * self.dt])
        contacts = np.zeros((self.steps, 2), dtype=np.int8)
        contacts[:, 0] = -1
        for step in range(self.steps):
            vel = vel + gravity_step
            pos = pos + vel * self.dt
            gap, normal, closest = segment_gap(pos, BALL_RADIUS, p0, p1)
            approaching = ds.dsum(vel * normal, axis=-1)
            active = (ds.value(gap) < 0.0) & (ds.value(approaching) < 0.0)
            if active.any():
                hit = int(np.argmin(np.where(active, ds.value(gap), np.inf)))
                t_hit = float(ds.value(closest_point_param(pos, p0[hit], p1[hit])))
                ni = normal[hit]
                vel = vel - ni * (approaching[hit] * (1.0 + CONTACT.restitution))
                pos = closest[hit] + ni * BALL_RADIUS
                contacts[step, 0] = hit
                contacts[step, 1] = 1 if t_hit == 0.0 else (2 if t_hit == 1.0 else 0)
        return pos, contacts

    def evaluate(self, point):
        angles = self._check_point(point)
        pos, _ = self._rollout(ds.seed(angles))
        diff = pos - self.target
        dist = ds.sqrt(ds.dsum(diff * diff))
        if ds.value(dist) == 0.0:
            return 0.0, np.zeros(self.dimension)
        return float(ds.value(dist)), ds.grad(dist)

    def branch_signature(self, point):
        angles = self._check_point(point)
        _, contacts = self._rollout(ds.Dual(angles, np.zeros((len(angles), 0))))
        return contacts.tobytes()

    def collider_contact_count(self, point) -> int:
        """Number of steps in contact with any collider (walls excluded)."""
        angles = self._check_point(point)
        _, contacts = self._rollout(ds.Dual(angles, np.zeros((len(angles), 0))))
        ids = contacts[:, 0]
        return int(((ids >= 0) & (ids < self.dimension)).sum())

    def miss_all_angles(self) -> np.ndarray:
        """Angle configuration whose rollout never touches a collider."""
        return np.full(self.dimension, np.pi / 2)

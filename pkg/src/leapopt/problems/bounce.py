"""Ball toss onto a penalty-contact ground plane.

The two parameters are the initial velocity components; the loss is the
distance of the ball to a fixed target after a 2 s episode. Ground contact is
a relaxed spring-damper with Coulomb friction, so the trajectory is smooth
within one contact pattern but its derivative jumps when the bounce count
changes. Gradients are exact forward-mode derivatives of the discrete rollout.
"""
from __future__ import annotations

import numpy as np

from ..core import Bounds
from ..diffsim import duals as ds
from ..diffsim.contact import PenaltyContact, penalty_friction_force, penalty_normal_force
from .base import Problem

GRAVITY = 9.8
BALL_MASS = 0.1
BALL_RADIUS = 0.1
START = np.array([0.0, 2.0])
TARGET = np.array([3.0, 1.0])
GROUND = PenaltyContact(stiffness=1.0e4, damping=10.0, friction=0.2)


class BounceProblem(Problem):
    def __init__(self, dt: float = 1.0e-3, steps: int = 2000,
                 start=START, target=TARGET, contact: PenaltyContact = GROUND):
        self.name = "bounce"
        self.dt = dt
        self.steps = steps
        self.start = np.asarray(start, dtype=float)
        self.target = np.asarray(target, dtype=float)
        self.contact = contact
        self._bounds = Bounds(np.array([-10.0, -10.0]), np.array([10.0, 0.0]))

    @property
    def bounds(self) -> Bounds:
        return self._bounds

    def _rollout(self, velocity):
        """Integrate the toss; returns final position and per-step branch codes.

        Code bits: 1 in contact, 2 normal force clamped to zero (separating
        faster than the spring pushes), 4/8 friction slip sign while the
        normal force is active. Every primal branch test is covered, so equal
        codes mean the same smooth piece.
        """
        dt, m = self.dt, BALL_MASS
        pos = ds.Dual(self.start, np.zeros((2, velocity.num_params)))
        vel = velocity
        branch_codes = np.zeros(self.steps, dtype=np.uint8)
        gravity = np.array([0.0, -GRAVITY * m])
        for step in range(self.steps):
            penetration = BALL_RADIUS - pos[1]
            fn = penalty_normal_force(penetration, vel[1], self.contact)
            ft = penalty_friction_force(fn, vel[0], self.contact)
            if ds.value(penetration) > 0.0:
                code = 1
                if ds.value(fn) == 0.0:
                    code |= 2
                else:
                    code |= (int(np.sign(ds.value(vel[0]))) + 1) << 2
                branch_codes[step] = code
            force = ds.stack([ft, fn]) + gravity
            vel = vel + force * (dt / m)
            pos = pos + vel * dt
        return pos, branch_codes

    def evaluate(self, point):
        v0 = self._check_point(point)
        pos, _ = self._rollout(ds.seed(v0))
        diff = pos - self.target
        dist = ds.sqrt(ds.dsum(diff * diff))
        if ds.value(dist) == 0.0:
            return 0.0, np.zeros(2)
        return float(ds.value(dist)), ds.grad(dist)

    def branch_signature(self, point):
        v0 = self._check_point(point)
        _, codes = self._rollout(ds.Dual(v0, np.zeros((2, 0))))
        return codes.tobytes()

    def bounce_count(self, point) -> int:
        """Number of flight-to-contact transitions over the episode."""
        v0 = self._check_point(point)
        _, codes = self._rollout(ds.Dual(v0, np.zeros((2, 0))))
        mask = (codes & 1).astype(bool)
        entries = mask[1:] & ~mask[:-1]
        return int(entries.sum()) + int(mask[0])

"""Velocity-controlled cartpole with per-step controls and adjoint gradients.

The default task drives one damped pendulum link by commanding the cart
velocity at each of T steps, so the parameter dimension grows with the
horizon; that is where reverse mode pays off over forward mode. A chained
n-link variant is available behind the ``n_links`` flag: link i hangs from
the tip of link i-1 and is driven by that pivot's acceleration (reaction
forces of children on parents are neglected), with direct torques on joints
2..n as extra per-step controls. Its per-step Jacobians come from the dual
module and are transposed in the same adjoint sweep.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Bounds
from ..diffsim import duals as ds
from ..diffsim.adjoint import CartpoleDynamics, simulate_backward, simulate_forward
from .base import Problem

TIP_TARGET = np.array([1.0, 0.5])
CONTROL_LIMIT = 3.0


@dataclass(frozen=True)
class NLinkCartpole:
    """Chain of damped links on a velocity-controlled cart.

    State layout: (x_c, u_prev, phi_1..n, omega_1..n, vprev_2..n) where
    vprev_i is link i's pivot velocity at the previous step. Controls per
    step: (cart velocity, torque_2, ..., torque_n).
    """

    n_links: int
    gravity: float = 9.8
    length: float = 1.0
    damping: float = 0.05
    mass: float = 1.0

    @property
    def state_size(self) -> int:
        return 3 * self.n_links + 1

    def initial_state(self) -> np.ndarray:
        return np.zeros(self.state_size)

    def _step_dual(self, z, dt: float):
        n = self.n_links
        g, ell, cd, m = self.gravity, self.length, self.damping, self.mass
        xc, u_prev = z[0], z[1]
        phi, omega, vprev = z[2:2 + n], z[2 + n:2 + 2 * n], z[2 + 2 * n:3 * n + 1]
        u, tau = z[3 * n + 1], z[3 * n + 2:]
        parts = []
        pivot_vels = []
        pivot_vel = u
        for i in range(n):
            if i == 0:
                accel = (u - u_prev) / dt
                torque = 0.0
            else:
                pivot_vel = pivot_vel + parts[-1][1] * ell * ds.cos(parts[-1][0])
                accel = (pivot_vel - vprev[i - 1]) / dt
                torque = tau[i - 1] / (m * ell * ell)
                pivot_vels.append(pivot_vel)
            omega_new = omega[i] + dt * (ds.sin(phi[i]) * (-g / ell)
                                         - ds.cos(phi[i]) * accel * (1.0 / ell)
                                         + torque - cd * omega[i])
            phi_new = phi[i] + dt * omega_new
            parts.append((phi_new, omega_new))
        pieces = [ds.stack([xc + dt * u, u])]
        pieces.append(ds.stack([p for p, _ in parts]))
        pieces.append(ds.stack([w for _, w in parts]))
        if pivot_vels:
            pieces.append(ds.stack(pivot_vels))
        return ds.concat(pieces)

    def step(self, state, control, dt):
        z = ds.seed(np.concatenate([state, np.atleast_1d(control)]))
        out = self._step_dual(z, dt)
        return out.val, out.dot

    def step_backward(self, saved, d_new_state, dt):
        jt = saved.T @ d_new_state
        return jt[: self.state_size], jt[self.state_size:]

    def tip_position(self, state) -> np.ndarray:
        n = self.n_links
        phi = state[2:2 + n]
        return np.array([state[0] + self.length * np.sin(phi).sum(),
                         -self.length * np.cos(phi).sum()])

    def tip_position_backward(self, state, d_tip) -> np.ndarray:
        n = self.n_links
        phi = state[2:2 + n]
        d_state = np.zeros(self.state_size)
        d_state[0] = d_tip[0]
        d_state[2:2 + n] = (d_tip[0] * self.length * np.cos(phi)
                            + d_tip[1] * self.length * np.sin(phi))
        return d_state


class CartpoleProblem(Problem):
    def __init__(self, horizon: int = 100, n_links: int = 1, dt: float = 0.02,
                 target=TIP_TARGET):
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        if n_links < 1:
            raise ValueError("n_links must be at least 1")
        self.name = "cartpole"
        self.horizon = horizon
        self.n_links = n_links
        self.dt = dt
        self.target = np.asarray(target, dtype=float)
        if n_links == 1:
            self.system = CartpoleDynamics()
        else:
            self.system = NLinkCartpole(n_links)
        dim = horizon * n_links
        self._bounds = Bounds(np.full(dim, -CONTROL_LIMIT),
                              np.full(dim, CONTROL_LIMIT))

    @property
    def bounds(self) -> Bounds:
        return self._bounds

    def evaluate(self, point):
        controls = self._check_point(point)
        if self.n_links > 1:
            controls = controls.reshape(self.horizon, self.n_links)
        state, tape = simulate_forward(self.system, controls, self.dt)
        diff = self.system.tip_position(state) - self.target
        dist = float(np.sqrt(diff @ diff))
        if dist == 0.0:
            return 0.0, np.zeros(self.dimension)
        d_state = self.system.tip_position_backward(state, diff / dist)
        grad = simulate_backward(self.system, tape, d_state)
        return dist, grad.reshape(self.dimension)

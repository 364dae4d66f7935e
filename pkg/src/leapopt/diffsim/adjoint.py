"""Reverse-mode gradients for controlled simulations via a discrete adjoint.

The forward pass records whatever each step needs onto an :class:`AdjointTape`;
the backward pass replays the tape in reverse, propagating a cotangent of the
final state back to every control. This costs one extra state copy per step
instead of the P-fold work of forward mode, so it is the right tool when the
parameter count (number of control steps) is large.

Systems implement two methods:

* ``step(state, control, dt) -> (new_state, saved)``
* ``step_backward(saved, d_new_state, dt) -> (d_state, d_control)``

``step_backward`` must be the exact transpose of the linearization of ``step``
at the saved point. Tapes are consume-once: running backward twice on the same
tape raises, because the second sweep would silently reuse freed state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np


class ControlledSystem(Protocol):
    def initial_state(self) -> np.ndarray: ...

    def step(self, state: np.ndarray, control: float, dt: float): ...

    def step_backward(self, saved: Any, d_new_state: np.ndarray, dt: float): ...


@dataclass
class AdjointTape:
    """Per-step records from a forward pass, consumable exactly once."""

    dt: float
    saved: list = field(default_factory=list)
    consumed: bool = False

    def append(self, record: Any) -> None:
        self.saved.append(record)

    def consume(self) -> list:
        if self.consumed:
            raise RuntimeError("adjoint tape already consumed; rerun the forward pass")
        self.consumed = True
        return self.saved

    def __len__(self) -> int:
        return len(self.saved)


def simulate_forward(system: ControlledSystem, controls: np.ndarray, dt: float):
    """Roll the system through all controls (one row per step), recording a tape."""
    controls = np.asarray(controls, dtype=float)
    state = np.asarray(system.initial_state(), dtype=float)
    tape = AdjointTape(dt=dt)
    for u in controls:
        state, saved = system.step(state, u, dt)
        tape.append(saved)
    return state, tape


def simulate_backward(system: ControlledSystem, tape: AdjointTape,
                      d_final_state: np.ndarray) -> np.ndarray:
    """Propagate a final-state cotangent back to a gradient over all controls."""
    records = tape.consume()
    d_state = np.asarray(d_final_state, dtype=float).copy()
    d_controls = [None] * len(records)
    for idx in range(len(records) - 1, -1, -1):
        d_state, d_u = system.step_backward(records[idx], d_state, tape.dt)
        d_controls[idx] = d_u
    return np.asarray(d_controls)


@dataclass(frozen=True)
class DoubleIntegrator:
    """Point mass on a line, control is acceleration. Exists to pin down the
    adjoint sweep against a closed-form Jacobian: with semi-implicit stepping,
    d x_T / d u_i = dt^2 * (T - i)."""

    x0: float = 0.0
    v0: float = 0.0

    def initial_state(self) -> np.ndarray:
        return np.array([self.x0, self.v0])

    def step(self, state, control, dt):
        x, v = state
        v_new = v + dt * control
        x_new = x + dt * v_new
        return np.array([x_new, v_new]), None

    def step_backward(self, saved, d_new_state, dt):
        dx_new, dv_new = d_new_state
        dx = dx_new
        dv = dv_new + dt * dx_new
        du = dt * dv_new + dt * dt * dx_new
        return np.array([dx, dv]), du


@dataclass(frozen=True)
class CartpoleDynamics:
    """Velocity-controlled cart with a single damped pendulum link.

    State is (cart position, pole angle from straight down, angular velocity,
    previous cart velocity). The control is the cart velocity for the step;
    the implied cart acceleration a = (u - u_prev) / dt drives the pole
    through the pivot, giving

        omega' = omega + dt * (-(g/L) sin phi - (a/L) cos phi - c_d * omega)
        phi'   = phi + dt * omega'
        x_c'   = x_c + dt * u
    """

    gravity: float = 9.8
    length: float = 1.0
    damping: float = 0.05
    x0: float = 0.0
    phi0: float = 0.0
    omega0: float = 0.0

    def initial_state(self) -> np.ndarray:
        return np.array([self.x0, self.phi0, self.omega0, 0.0])

    def step(self, state, control, dt):
        xc, phi, omega, u_prev = state
        a = (control - u_prev) / dt
        g, ell, cd = self.gravity, self.length, self.damping
        omega_new = omega + dt * (-(g / ell) * np.sin(phi)
                                  - (a / ell) * np.cos(phi)
                                  - cd * omega)
        phi_new = phi + dt * omega_new
        xc_new = xc + dt * control
        return np.array([xc_new, phi_new, omega_new, control]), (phi, a)

    def step_backward(self, saved, d_new_state, dt):
        phi, a = saved
        g, ell, cd = self.gravity, self.length, self.damping
        dxc_new, dphi_new, domega_new, du_prev_new = d_new_state
        # phi' = phi + dt * omega', so omega' collects dt * dphi_new as well.
        domega_out = domega_new + dt * dphi_new
        dphi = dphi_new + domega_out * dt * (-(g / ell) * np.cos(phi)
                                             + (a / ell) * np.sin(phi))
        domega = domega_out * (1.0 - dt * cd)
        da = domega_out * dt * (-np.cos(phi) / ell)
        dxc = dxc_new
        du_prev = -da / dt
        du = dt * dxc_new + da / dt + du_prev_new
        return np.array([dxc, dphi, domega, du_prev]), du

    def tip_position(self, state) -> np.ndarray:
        xc, phi = state[0], state[1]
        return np.array([xc + self.length * np.sin(phi),
                         -self.length * np.cos(phi)])

    def tip_position_backward(self, state, d_tip) -> np.ndarray:
        phi = state[1]
        d_state = np.zeros(4)
        d_state[0] = d_tip[0]
        d_state[1] = (d_tip[0] * self.length * np.cos(phi)
                      + d_tip[1] * self.length * np.sin(phi))
        return d_state

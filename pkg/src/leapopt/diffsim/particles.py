"""Particle and mass-spring kernels with semi-implicit Euler integration.

All state arrays are (N, D) for N particles in D spatial dimensions and may be
plain float arrays or :class:`~leapopt.diffsim.duals.Dual` arrays; the same
code path runs in both cases, so derivative tracking cannot perturb the primal
trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import duals as ds


class SimulationFailure(RuntimeError):
    """Raised when the integrator encounters non-finite forces or state."""


@dataclass(frozen=True)
class SpringSet:
    """Springs between particle pairs (i, j) with per-spring coefficients."""

    i: np.ndarray
    j: np.ndarray
    rest_length: np.ndarray
    stiffness: object  # (S,) floats, or Dual when stiffness is optimized
    damping: np.ndarray

    def __post_init__(self):
        n = self.i.size
        if not (self.j.size == n and self.rest_length.size == n):
            raise ValueError("spring index/rest-length arrays must share a length")
        if np.any(np.asarray(self.rest_length) <= 0):
            raise ValueError("rest lengths must be positive")

    def incidence(self, num_particles: int) -> np.ndarray:
        """Signed incidence matrix (S, N): row s is +1 at i[s], -1 at j[s]."""
        inc = np.zeros((self.i.size, num_particles))
        inc[np.arange(self.i.size), self.i] = 1.0
        inc[np.arange(self.j.size), self.j] = -1.0
        return inc


@dataclass
class ParticleSystem:
    """Positions/velocities (N, D), positive masses (N,), optional springs."""

    positions: object
    velocities: object
    masses: np.ndarray
    springs: SpringSet | None = None

    def __post_init__(self):
        if np.any(self.masses <= 0):
            raise ValueError("masses must be positive")

    @property
    def num_particles(self) -> int:
        return self.masses.size


def spring_forces(positions, velocities, springs: SpringSet, incidence: np.ndarray):
    """Per-particle (N, D) forces from stretched, damped springs.

    Spring force magnitude is k * (length - rest) + kd * d(length)/dt, applied
    along the current spring axis. Computed as (magnitude / length) * edge so
    the edge vectors are never normalized explicitly; only per-spring scalars
    are divided, which keeps the derivative arrays small.
    """
    d = ds.matvec(incidence, positions)          # (S, D) edge vectors i - j
    v = ds.matvec(incidence, velocities)
    inv_len2 = 1.0 / ds.dsum(d * d, axis=1)
    inv_len = ds.sqrt(inv_len2)
    rate_times_len = ds.dsum(d * v, axis=1)
    mag_over_len = (springs.stiffness * (1.0 - springs.rest_length * inv_len)
                    + springs.damping * (rate_times_len * inv_len2))
    per_spring = ds.expand(mag_over_len, -1) * d
    return ds.matvec(-incidence.T, per_spring)


def step_semi_implicit(positions, velocities, forces, masses: np.ndarray, dt: float):
    """One symplectic Euler step: velocity update precedes position update."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not np.all(np.isfinite(ds.value(forces))):
        raise SimulationFailure("non-finite force")
    new_v = velocities + forces * (dt / masses)[:, None]
    new_x = positions + new_v * dt
    return new_x, new_v


def simulate(system: ParticleSystem, dt: float, steps: int, gravity=None, extra_forces=None):
    """Integrate a free (possibly spring-coupled) particle system.

    ``extra_forces(positions, velocities, t) -> (N, D)`` adds e.g. contact
    forces. Returns the final (positions, velocities).
    """
    x, v = system.positions, system.velocities
    masses = system.masses
    inc = system.springs.incidence(system.num_particles) if system.springs else None
    for step in range(steps):
        f = np.zeros_like(ds.value(x))
        if gravity is not None:
            f = f + masses[:, None] * np.asarray(gravity)
        if system.springs is not None:
            f = spring_forces(x, v, system.springs, inc) + f
        if extra_forces is not None:
            f = extra_forces(x, v, step * dt) + f
        x, v = step_semi_implicit(x, v, f, masses, dt)
    return x, v


def total_energy(system: ParticleSystem, positions, velocities, gravity=None) -> float:
    """Kinetic + elastic (+ gravitational) energy of the primal state."""
    x, v = ds.value(positions), ds.value(velocities)
    energy = 0.5 * float(np.sum(system.masses[:, None] * v * v))
    if system.springs is not None:
        inc = system.springs.incidence(system.num_particles)
        d = inc @ x
        length = np.linalg.norm(d, axis=1)
        k = ds.value(system.springs.stiffness)
        energy += 0.5 * float(np.sum(k * (length - system.springs.rest_length) ** 2))
    if gravity is not None:
        energy -= float(np.sum(system.masses[:, None] * np.asarray(gravity) * x))
    return energy


def grid_springs(rows: int, cols: int, spacing: float, stiffness, damping: float,
                 shear: bool = True) -> SpringSet:
    """Structural (+ optional shear) springs for a rows x cols particle grid.

    Particle index is row-major: p = r * cols + c.
    """
    ii, jj, rest = [], [], []

    def add(a, b, length):
        ii.append(a)
        jj.append(b)
        rest.append(length)

    for r in range(rows):
        for c in range(cols):
            p = r * cols + c
            if c + 1 < cols:
                add(p, p + 1, spacing)
            if r + 1 < rows:
                add(p, p + cols, spacing)
            if shear and r + 1 < rows and c + 1 < cols:
                add(p, p + cols + 1, spacing * np.sqrt(2.0))
                add(p + 1, p + cols, spacing * np.sqrt(2.0))
    count = len(ii)
    if not isinstance(stiffness, ds.Dual):
        stiffness = np.broadcast_to(np.asarray(stiffness, dtype=float), (count,)).copy()
    return SpringSet(
        i=np.array(ii), j=np.array(jj), rest_length=np.array(rest),
        stiffness=stiffness, damping=np.full(count, damping),
    )

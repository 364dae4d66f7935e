"""Cloth swing-and-release onto the floor.

A 20 cm x 20 cm cloth (9x9 particle mass-spring grid with structural and
shear springs) hangs from two anchored top corners. The anchors translate
along a smooth swing arc and release mid-stroke; the cloth flies and settles
on the floor, where contact removes the normal velocity component (zero
restitution). Two parameterizations:

* stiffness mode (16D): the sheet is split into 4x4 material patches; each
  spring takes the stiffness of the patch containing its midpoint.
* velocity mode (3D): the anchors are absent and the whole cloth starts with
  one shared initial velocity; stiffness is fixed.

Targets are the final particle positions of a frozen reference rollout, so
every loss variant has a known near-zero optimum inside the bounds. Loss
variants: ``single`` (center-of-mass distance), ``corner`` (mean distance of
the four corner particles), ``mesh`` (mean distance over all particles).
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..core import Bounds
from ..diffsim import duals as ds
from ..diffsim.contact import ReflectionContact, reflect_normal_velocity
from ..diffsim.particles import grid_springs, spring_forces
from .base import Problem

ROWS = COLS = 9
SIZE = 0.2
SPACING = SIZE / (ROWS - 1)
PARTICLE_MASS = 1.0e-3
SPRING_DAMPING = 0.05
GRAVITY = 9.8
Z_TOP = 0.5
DT = 1.0e-3
STEPS = 1000

PATCH_GRID = 4
STIFFNESS_LOW, STIFFNESS_HIGH = 20.0, 200.0
FIXED_STIFFNESS = 100.0
REFERENCE_STIFFNESS = 110.0
REFERENCE_VELOCITY = np.array([0.0, 1.2, 0.8])
VELOCITY_LIMIT = 3.0

SWING_OFFSET = np.array([0.0, 0.35, 0.15])
SWING_PERIOD = 0.8
RELEASE_TIME = 0.4

ANCHOR_IDS = np.array([0, COLS - 1])
CORNER_IDS = np.array([0, COLS - 1, (ROWS - 1) * COLS, ROWS * COLS - 1])
FLOOR_NORMAL = np.array([0.0, 0.0, 1.0])
FLOOR = ReflectionContact(restitution=0.0)

LOSS_MODES = ("single", "corner", "mesh")

_TARGET_CACHE: dict[tuple, np.ndarray] = {}


def rest_positions() -> np.ndarray:
    """Hanging sheet in the x-z plane, row 0 on top."""
    r, c = np.meshgrid(np.arange(ROWS), np.arange(COLS), indexing="ij")
    x = c * SPACING
    z = Z_TOP - r * SPACING
    return np.stack([x.ravel(), np.zeros(ROWS * COLS), z.ravel()], axis=1)


def spring_patch_ids(springs) -> np.ndarray:
    """Patch index of each spring's material-space midpoint."""
    material = rest_positions()[:, [0, 2]]
    material[:, 1] = Z_TOP - material[:, 1]
    mid = 0.5 * (material[springs.i] + material[springs.j])
    cell = np.minimum((mid / (SIZE / PATCH_GRID)).astype(int), PATCH_GRID - 1)
    return cell[:, 1] * PATCH_GRID + cell[:, 0]


def _swing_shape(t: float) -> float:
    return 0.5 * (1.0 - np.cos(np.pi * t / SWING_PERIOD))


class SwingProblem(Problem):
    def __init__(self, mode: str, loss: str = "mesh", steps: int = STEPS):
        if mode not in ("stiffness", "velocity"):
            raise ValueError(f"unknown swing mode {mode!r}")
        if loss not in LOSS_MODES:
            raise ValueError(f"unknown swing loss {loss!r}; pick one of {LOSS_MODES}")
        if steps < 1:
            raise ValueError("steps must be positive")
        self.mode = mode
        self.loss_mode = loss
        self.steps = int(steps)
        self.name = f"swing-{mode}"
        self._geometry = grid_springs(ROWS, COLS, SPACING, stiffness=1.0,
                                      damping=SPRING_DAMPING, shear=True)
        self._incidence = self._geometry.incidence(ROWS * COLS)
        self._patch_ids = spring_patch_ids(self._geometry)
        self._rest = rest_positions()
        if mode == "stiffness":
            dim = PATCH_GRID * PATCH_GRID
            self._bounds = Bounds(np.full(dim, STIFFNESS_LOW),
                                  np.full(dim, STIFFNESS_HIGH))
        else:
            self._bounds = Bounds(np.full(3, -VELOCITY_LIMIT),
                                  np.full(3, VELOCITY_LIMIT))

    @property
    def bounds(self) -> Bounds:
        return self._bounds

    def _rollout(self, stiffness, initial_velocity, track_contacts: bool = False):
        anchored = self.mode == "stiffness"
        springs = replace(self._geometry, stiffness=stiffness)
        num = ROWS * COLS
        pos = self._rest.copy()
        vel = initial_velocity
        gravity = np.array([0.0, 0.0, -GRAVITY])
        anchor_mask = np.zeros((num, 1), dtype=bool)
        anchor_mask[ANCHOR_IDS] = True
        contact_log = np.zeros((self.steps, num), dtype=bool) if track_contacts else None
        scale = DT / PARTICLE_MASS
        for step in range(self.steps):
            forces = spring_forces(pos, vel, springs, self._incidence)
            vel = vel + forces * scale + gravity * DT
            if anchored:
                t_now, t_next = step * DT, (step + 1) * DT
                if t_next <= RELEASE_TIME:
                    shift = (_swing_shape(t_next) - _swing_shape(t_now)) / DT
                    vel = ds.where(anchor_mask, SWING_OFFSET * shift, vel)
            pos = pos + vel * DT
            if anchored and (step + 1) * DT <= RELEASE_TIME:
                scripted = self._rest + SWING_OFFSET * _swing_shape((step + 1) * DT)
                pos = ds.where(anchor_mask, scripted, pos)
            touching = (ds.value(pos)[:, 2] < 0.0) & (ds.value(vel)[:, 2] < 0.0)
            if contact_log is not None:
                contact_log[step] = touching
            if touching.any():
                vel = reflect_normal_velocity(vel, FLOOR_NORMAL, FLOOR, touching)
        return pos, contact_log

    def _targets(self) -> np.ndarray:
        key = (self.mode, self.steps)
        cached = _TARGET_CACHE.get(key)
        if cached is not None:
            return cached
        if self.mode == "stiffness":
            k = np.full(len(self._patch_ids), REFERENCE_STIFFNESS)
            v0 = np.zeros((1, 3))
        else:
            k = np.full(len(self._patch_ids), FIXED_STIFFNESS)
            v0 = REFERENCE_VELOCITY[None, :]
        pos, _ = self._rollout(k, np.broadcast_to(v0, (ROWS * COLS, 3)).copy())
        _TARGET_CACHE[key] = ds.value(pos)
        return _TARGET_CACHE[key]

    def _spring_stiffness(self, point):
        if self.mode == "stiffness":
            return ds.seed(point)[self._patch_ids]
        return np.full(len(self._patch_ids), FIXED_STIFFNESS)

    def _initial_velocity(self, point):
        if self.mode == "stiffness":
            return ds.Dual(np.zeros((ROWS * COLS, 3)),
                           np.zeros((ROWS * COLS, 3, self.dimension)))
        return ds.seed(point) * np.ones((ROWS * COLS, 1))

    def _loss(self, pos, targets):
        if self.loss_mode == "single":
            com = ds.dsum(pos, axis=0) * (1.0 / (ROWS * COLS))
            diff = com - targets.mean(axis=0)
            return ds.sqrt(ds.maximum(ds.dsum(diff * diff), 1.0e-30))
        ids = CORNER_IDS if self.loss_mode == "corner" else np.arange(ROWS * COLS)
        diff = pos[ids] - targets[ids]
        dist = ds.sqrt(ds.maximum(ds.dsum(diff * diff, axis=-1), 1.0e-30))
        return ds.dsum(dist) * (1.0 / len(ids))

    def evaluate(self, point):
        point = self._check_point(point)
        targets = self._targets()
        pos, _ = self._rollout(self._spring_stiffness(point),
                               self._initial_velocity(point))
        loss = self._loss(pos, targets)
        return float(ds.value(loss)), ds.grad(loss)

    def branch_signature(self, point):
        point = self._check_point(point)
        self._targets()
        if self.mode == "stiffness":
            k = ds.value(self._spring_stiffness(point))
            v0 = np.zeros((ROWS * COLS, 3))
        else:
            k = np.full(len(self._patch_ids), FIXED_STIFFNESS)
            v0 = np.broadcast_to(point, (ROWS * COLS, 3)).copy()
        _, contact_log = self._rollout(k, v0, track_contacts=True)
        return np.packbits(contact_log).tobytes()

"""Separable rugged test landscape with a closed-form gradient.

Each coordinate contributes a parabola centered at 0.7 overlaid with a
damped high-frequency ripple, giving many shallow local minima and a single
global basin. Cheap to evaluate, so it carries the optimizer-comparison
experiments.
"""
from __future__ import annotations

import numpy as np

from ..core import Bounds
from .base import Problem

RIPPLE_AMP = 0.15
RIPPLE_FREQ = 14.0 * np.pi
RIPPLE_CENTER = 0.4
BASIN_CENTER = 0.7


class SyntheticRugged(Problem):
    def __init__(self, dim: int = 10):
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        self.name = "synthetic"
        self._bounds = Bounds(np.zeros(dim), np.ones(dim))

    @property
    def bounds(self) -> Bounds:
        return self._bounds

    def evaluate(self, point):
        x = self._check_point(point)
        envelope = np.exp(-2.0 * (x - RIPPLE_CENTER) ** 2)
        ripple = np.sin(RIPPLE_FREQ * x)
        loss = float(np.sum((x - BASIN_CENTER) ** 2 + RIPPLE_AMP * ripple * envelope))
        grad = (2.0 * (x - BASIN_CENTER)
                + RIPPLE_AMP * envelope * (RIPPLE_FREQ * np.cos(RIPPLE_FREQ * x)
                                           - 4.0 * (x - RIPPLE_CENTER) * ripple))
        return loss, grad

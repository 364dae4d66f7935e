"""Shared toy problems and finite-difference utilities for the test suite."""
from __future__ import annotations

import numpy as np

from leapopt.core import Bounds
from leapopt.problems.base import Problem


class Sphere(Problem):
    """Smooth quadratic bowl; the workhorse for optimizer sanity checks."""

    def __init__(self, dim: int = 3, center: float = 0.6,
                 lower: float = 0.0, upper: float = 1.0):
        self.name = "sphere"
        self.center = np.full(dim, center)
        self._bounds = Bounds(np.full(dim, lower), np.full(dim, upper))

    @property
    def bounds(self) -> Bounds:
        return self._bounds

    def evaluate(self, point):
        x = self._check_point(point)
        diff = x - self.center
        return float(diff @ diff), 2.0 * diff


class ConstantLoss(Problem):
    """Flat landscape with a zero gradient; exercises stagnation logic."""

    def __init__(self, dim: int = 2, loss: float = 1.5):
        self.name = "constant"
        self.loss = loss
        self._bounds = Bounds(np.zeros(dim), np.ones(dim))

    @property
    def bounds(self) -> Bounds:
        return self._bounds

    def evaluate(self, point):
        x = self._check_point(point)
        return self.loss, np.zeros(x.size)


class NanLoss(Problem):
    """Always returns NaN; exercises the failed-episode path."""

    def __init__(self, dim: int = 2):
        self.name = "nan"
        self._bounds = Bounds(np.zeros(dim), np.ones(dim))

    @property
    def bounds(self) -> Bounds:
        return self._bounds

    def evaluate(self, point):
        x = self._check_point(point)
        return float("nan"), np.zeros(x.size)


class NanGradient(Problem):
    """Finite loss but a NaN gradient; descent should take zero steps."""

    def __init__(self, dim: int = 2):
        self.name = "nan-grad"
        self._bounds = Bounds(np.zeros(dim), np.ones(dim))

    @property
    def bounds(self) -> Bounds:
        return self._bounds

    def evaluate(self, point):
        x = self._check_point(point)
        return float(np.sum(x * x)), np.full(x.size, np.nan)


def central_difference(problem, point, h=1e-6):
    """Central finite-difference gradient in problem coordinates."""
    point = np.asarray(point, dtype=float)
    fd = np.zeros(point.size)
    for d in range(point.size):
        hi = point.copy()
        lo = point.copy()
        hi[d] += h
        lo[d] -= h
        fd[d] = (problem.evaluate(hi)[0] - problem.evaluate(lo)[0]) / (2.0 * h)
    return fd


def relative_error(fd, analytic, floor=1e-6):
    """Per-component |fd - g| / max(|fd|, |g|, floor)."""
    fd = np.asarray(fd, dtype=float)
    analytic = np.asarray(analytic, dtype=float)
    denom = np.maximum(np.maximum(np.abs(fd), np.abs(analytic)), floor)
    return np.abs(fd - analytic) / denom

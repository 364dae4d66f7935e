"""Problem interface shared by every benchmark scene."""
from __future__ import annotations

import abc

import numpy as np

from ..core import Bounds, DimensionMismatch


class Problem(abc.ABC):
    """A deterministic loss over a box-bounded parameter space.

    ``evaluate`` returns ``(loss, gradient)`` with ``gradient`` an array of
    shape (dimension,) when ``gradient_available`` is true and None otherwise.
    Repeated evaluations of the same point agree bitwise.
    """

    name: str = "problem"
    gradient_available: bool = True

    @property
    @abc.abstractmethod
    def bounds(self) -> Bounds: ...

    @property
    def dimension(self) -> int:
        return self.bounds.dim

    @abc.abstractmethod
    def evaluate(self, point: np.ndarray) -> tuple[float, np.ndarray | None]: ...

    def branch_signature(self, point: np.ndarray):
        """Hashable id of the active branch set (contact pattern) at a point.

        Smooth problems return None. Piecewise-smooth problems return a value
        that is constant within one smooth piece, so finite-difference checks
        can reject probe pairs that straddle a branch boundary.
        """
        return None

    def _check_point(self, point: np.ndarray) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dimension,):
            raise DimensionMismatch(
                f"{self.name} expects shape ({self.dimension},), got {point.shape}"
            )
        return point


class GradientFreeView(Problem):
    """Wrapper that hides a problem's gradients (baseline ablations)."""

    gradient_available = False

    def __init__(self, inner: Problem):
        self.inner = inner
        self.name = inner.name + "-nograd"

    @property
    def bounds(self) -> Bounds:
        return self.inner.bounds

    def evaluate(self, point):
        loss, _ = self.inner.evaluate(point)
        return loss, None

    def branch_signature(self, point):
        return self.inner.branch_signature(point)

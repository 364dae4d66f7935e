"""Clipped gradient descent with stagnation-based early termination.

Also provides the RandDescents baseline: repeated descents from uniform
random starts sharing one budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Budget, EvaluationRecord, Evaluator, RunLog

__all__ = [
    "DescentConfig",
    "DescentTrace",
    "clip_gradient",
    "descend",
    "rand_descents_minimize",
]

REASON_MAX_STEPS = "max-steps"
REASON_STAGNATION = "stagnation"
REASON_BUDGET = "budget"
REASON_NO_GRADIENT = "no-gradient"


@dataclass(frozen=True)
class DescentConfig:
    """Step size and termination rules, all in unit-cube coordinates.

    A None stagnation_tolerance means loss-scaled: max(1e-6 * |best|, 1e-8).
    """

    learning_rate: float = 0.05
    max_steps: int = 25
    stagnation_window: int = 3
    stagnation_tolerance: Optional[float] = None
    clip_norm: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0.0 or self.clip_norm <= 0.0:
            raise ValueError("learning_rate and clip_norm must be positive")
        if self.max_steps < 1 or self.stagnation_window < 1:
            raise ValueError("max_steps and stagnation_window must be >= 1")
        if self.stagnation_tolerance is not None and self.stagnation_tolerance < 0.0:
            raise ValueError("stagnation_tolerance must be non-negative")


@dataclass
class DescentTrace:
    """Every visited record of one descent plus why it stopped."""

    records: list = field(default_factory=list)
    reason: str = REASON_MAX_STEPS

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final_point(self) -> Optional[np.ndarray]:
        """Last evaluated point (unit cube), or None for an empty trace."""
        if not self.records:
            return None
        return self.records[-1].point


def clip_gradient(gradient: np.ndarray, clip_norm: float) -> np.ndarray:
    """Rescale the gradient to norm `clip_norm` when it exceeds it."""
    gradient = np.asarray(gradient, dtype=float)
    norm = float(np.linalg.norm(gradient))
    if norm > clip_norm:
        return gradient * (clip_norm / norm)
    return gradient


def descend(
    evaluator: Evaluator,
    start: np.ndarray,
    config: DescentConfig = None,
    phase: Optional[dict] = None,
) -> DescentTrace:
    """Gradient descent from `start`: evaluate, then step s <- s - a * clip(g).

    Stops at max_steps, on budget exhaustion, or once the best loss inside
    this descent has gone `stagnation_window` consecutive evaluations without
    improving by more than the tolerance.  A missing or non-finite gradient
    contributes a zero step and counts toward stagnation.  Consumes exactly
    len(trace) budget steps.
    """
    if config is None:
        config = DescentConfig()
    if not evaluator.gradient_available:
        return DescentTrace([], REASON_NO_GRADIENT)

    point = np.clip(np.asarray(start, dtype=float), 0.0, 1.0)
    trace = DescentTrace([], REASON_MAX_STEPS)
    best = np.inf
    stalled = 0
    for _ in range(config.max_steps):
        if evaluator.budget.exhausted:
            trace.reason = REASON_BUDGET
            break
        rec = evaluator(point, phase=phase)
        trace.records.append(rec)
        tolerance = config.stagnation_tolerance
        if tolerance is None:
            tolerance = max(1e-6 * abs(best), 1e-8) if np.isfinite(best) else 0.0
        if rec.loss < best - tolerance:
            best = rec.loss
            stalled = 0
        else:
            stalled += 1
        if stalled >= config.stagnation_window:
            trace.reason = REASON_STAGNATION
            break
        grad = rec.gradient
        if grad is None or not np.all(np.isfinite(grad)):
            continue  # zero step; the stagnation counter already advanced
        point = np.clip(
            point - config.learning_rate * clip_gradient(grad, config.clip_norm),
            0.0,
            1.0,
        )
    return trace


def rand_descents_minimize(
    problem,
    budget: Budget,
    config: DescentConfig = None,
    rng: np.random.Generator = None,
    log: RunLog = None,
) -> EvaluationRecord:
    """Descents from uniform random starts until the budget is exhausted."""
    if rng is None:
        raise ValueError("rand_descents_minimize requires an rng")
    if not problem.gradient_available:
        raise ValueError("rand_descents_minimize needs a gradient-capable problem")
    evaluator = Evaluator(problem, budget, log)
    restart = 0
    while not budget.exhausted:
        start = rng.uniform(size=problem.dimension)
        descend(evaluator, start, config, phase={"descent": restart})
        restart += 1
    return evaluator.log.best()

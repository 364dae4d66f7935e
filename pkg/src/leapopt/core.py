"""Shared domain types: search-space bounds, budget accounting, evaluation
records and run logs, and deterministic RNG construction.

All optimizers in this package work in the normalized unit cube; problems
receive denormalized (physical) points. The run log is the single source of
truth for budget accounting: one committed record == one simulation episode.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

# Loss recorded for a failed (NaN) simulation episode. The episode still
# consumes one budget step.
FAILED_LOSS = 1.0e6


class DimensionMismatch(ValueError):
    """Raised when a point's length does not match the expected dimension."""


class BudgetExhausted(RuntimeError):
    """Raised when an evaluation is requested but the budget is spent."""


@dataclass(frozen=True)
class Bounds:
    """Box constraints, one (lower, upper) pair per dimension."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("lower/upper must be 1D arrays of equal length")
        if not np.all(lo < hi):
            raise ValueError("require lower[i] < upper[i] for all i")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def clamp(self, point: np.ndarray) -> np.ndarray:
        return np.clip(point, self.lower, self.upper)

    @staticmethod
    def unit(dim: int) -> "Bounds":
        return Bounds(np.zeros(dim), np.ones(dim))


def normalize(point: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Map a point from problem coordinates to the unit cube.

    Points outside the bounds are clamped first.
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (bounds.dim,):
        raise DimensionMismatch(f"expected dimension {bounds.dim}, got {point.shape}")
    return (bounds.clamp(point) - bounds.lower) / bounds.span


def denormalize(unit_point: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Inverse of :func:`normalize`; unit-cube input expected."""
    unit_point = np.asarray(unit_point, dtype=float)
    if unit_point.shape != (bounds.dim,):
        raise DimensionMismatch(f"expected dimension {bounds.dim}, got {unit_point.shape}")
    if np.any(unit_point < 0.0) or np.any(unit_point > 1.0):
        warnings.warn("denormalize: input outside the unit cube, clamping")
        unit_point = np.clip(unit_point, 0.0, 1.0)
    return bounds.lower + unit_point * bounds.span


@dataclass
class EvaluationRecord:
    """One simulation episode: unit-cube point, loss, optional unit-cube gradient."""

    point: np.ndarray
    loss: float
    gradient: Optional[np.ndarray]
    step_index: int
    phase: Optional[dict] = None

    @property
    def failed(self) -> bool:
        return self.loss >= FAILED_LOSS


@dataclass
class Budget:
    """Evaluation budget; every simulator episode costs exactly one step."""

    max_steps: int
    used: int = 0

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")

    @property
    def remaining(self) -> int:
        return self.max_steps - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.max_steps

    def spend(self) -> None:
        if self.exhausted:
            raise BudgetExhausted(f"budget of {self.max_steps} steps exhausted")
        self.used += 1


class RunLog:
    """Append-only log of evaluation records, tied to a budget.

    Committing a record spends one budget step; the number of records always
    equals ``budget.used``.
    """

    def __init__(self, budget: Budget):
        self.budget = budget
        self.records: list[EvaluationRecord] = []

    def commit(self, record: EvaluationRecord) -> EvaluationRecord:
        self.budget.spend()
        self.records.append(record)
        return record

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[EvaluationRecord]:
        return iter(self.records)

    def best(self) -> EvaluationRecord:
        if not self.records:
            raise ValueError("empty log has no best record")
        losses = np.array([r.loss for r in self.records])
        return self.records[int(np.argmin(losses))]


class Evaluator:
    """Bridges optimizers (unit cube) and a problem (physical coordinates).

    Denormalizes the query, runs one episode, converts the gradient to
    unit-cube coordinates via the chain rule, maps NaN losses to the failure
    sentinel, and commits the record to the run log.
    """

    def __init__(self, problem, budget: Budget, log: Optional[RunLog] = None):
        self.problem = problem
        self.bounds: Bounds = problem.bounds
        self.log = log if log is not None else RunLog(budget)
        if self.log.budget is not budget:
            raise ValueError("log and evaluator must share one budget")
        self.budget = budget

    @property
    def gradient_available(self) -> bool:
        return self.problem.gradient_available

    def __call__(self, unit_point: np.ndarray, phase: Optional[dict] = None) -> EvaluationRecord:
        if self.budget.exhausted:
            raise BudgetExhausted(f"budget of {self.budget.max_steps} steps exhausted")
        unit_point = np.clip(np.asarray(unit_point, dtype=float), 0.0, 1.0)
        x = self.bounds.lower + unit_point * self.bounds.span
        loss, grad = self.problem.evaluate(x)
        if not np.isfinite(loss):
            loss, grad = FAILED_LOSS, None
        unit_grad = None
        if grad is not None:
            unit_grad = np.asarray(grad, dtype=float) * self.bounds.span
        record = EvaluationRecord(
            point=unit_point.copy(),
            loss=float(loss),
            gradient=unit_grad,
            step_index=self.budget.used,
            phase=phase,
        )
        return self.log.commit(record)


def write_jsonl(path, log: RunLog, bounds: Bounds) -> None:
    """Serialize a run log, one record per line.

    Points and gradient norms are reported in problem coordinates so the file
    stands on its own; ``grad_norm`` is null for gradient-free episodes.
    """
    with open(path, "w") as fh:
        for rec in log:
            x = bounds.lower + rec.point * bounds.span
            grad_norm = None
            if rec.gradient is not None:
                grad_norm = float(np.linalg.norm(rec.gradient / bounds.span))
            row = {
                "step": rec.step_index,
                "point": [float(v) for v in x],
                "loss": rec.loss,
                "grad_norm": grad_norm,
            }
            if rec.phase is not None:
                row["phase"] = rec.phase
            fh.write(json.dumps(row) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator: same seed + same call sequence => same draws."""
    return np.random.default_rng(int(seed))

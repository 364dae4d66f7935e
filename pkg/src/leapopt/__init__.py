"""Three-level global optimization on differentiable simulation benchmarks."""
from .core import (
    Bounds,
    Budget,
    BudgetExhausted,
    DimensionMismatch,
    EvaluationRecord,
    Evaluator,
    RunLog,
    denormalize,
    make_rng,
    normalize,
)

__all__ = [
    "Bounds", "Budget", "BudgetExhausted", "DimensionMismatch",
    "EvaluationRecord", "Evaluator", "RunLog",
    "denormalize", "make_rng", "normalize",
]

__version__ = "0.1.0"

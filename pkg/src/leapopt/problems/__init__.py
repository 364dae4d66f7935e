"""Benchmark problem registry."""
from __future__ import annotations

from typing import Callable

from .base import GradientFreeView, Problem
from .bounce import BounceProblem
from .cartpole import CartpoleProblem
from .pinball import PinballProblem
from .swing import SwingProblem
from .synthetic import SyntheticRugged

PROBLEM_BUILDERS: dict[str, Callable[..., Problem]] = {
    "synthetic": lambda dim=10, **kw: SyntheticRugged(dim=int(dim), **kw),
    "cartpole": lambda horizon=100, n_links=1, **kw: CartpoleProblem(
        horizon=int(horizon), n_links=int(n_links), **kw),
    "bounce": lambda **kw: BounceProblem(**kw),
    "pinball-2": lambda **kw: PinballProblem(1, 2, **kw),
    "pinball-16": lambda **kw: PinballProblem(4, 4, **kw),
    "swing-stiffness": lambda loss="mesh", **kw: SwingProblem("stiffness", loss=loss, **kw),
    "swing-velocity": lambda loss="mesh", **kw: SwingProblem("velocity", loss=loss, **kw),
}


def problem_names() -> list[str]:
    return sorted(PROBLEM_BUILDERS)


def get_problem(name: str, **options) -> Problem:
    try:
        builder = PROBLEM_BUILDERS[name]
    except KeyError:
        known = ", ".join(problem_names())
        raise KeyError(f"unknown problem {name!r}; known problems: {known}") from None
    return builder(**options)


__all__ = [
    "Problem", "GradientFreeView", "SyntheticRugged", "CartpoleProblem",
    "BounceProblem", "PinballProblem", "SwingProblem",
    "PROBLEM_BUILDERS", "get_problem", "problem_names",
]

"""Clipped gradient descent: stepping, clipping, and termination semantics."""
import numpy as np
import pytest

from leapopt.core import Budget, Evaluator, RunLog, make_rng
from leapopt.descent import (
    REASON_BUDGET,
    REASON_MAX_STEPS,
    REASON_NO_GRADIENT,
    REASON_STAGNATION,
    DescentConfig,
    DescentTrace,
    clip_gradient,
    descend,
    rand_descents_minimize,
)
from leapopt.problems import GradientFreeView
from helpers import ConstantLoss, NanGradient, Sphere


def make_evaluator(problem, budget_steps):
    budget = Budget(budget_steps)
    return Evaluator(problem, budget, RunLog(budget))


def test_clip_gradient_rescales_only_long_vectors():
    short = np.array([0.3, 0.4])
    np.testing.assert_array_equal(clip_gradient(short, 1.0), short)
    long = np.array([3.0, 4.0])
    clipped = clip_gradient(long, 1.0)
    assert np.linalg.norm(clipped) == pytest.approx(1.0)
    np.testing.assert_allclose(clipped, long / 5.0)


def test_config_validation():
    with pytest.raises(ValueError):
        DescentConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        DescentConfig(max_steps=0)
    with pytest.raises(ValueError):
        DescentConfig(stagnation_window=0)
    with pytest.raises(ValueError):
        DescentConfig(stagnation_tolerance=-1.0)
    with pytest.raises(ValueError):
        DescentConfig(clip_norm=0.0)


def test_descend_reduces_loss_on_a_quadratic():
    evaluator = make_evaluator(Sphere(dim=2, center=0.6), 40)
    trace = descend(evaluator, np.array([0.1, 0.9]),
                    DescentConfig(learning_rate=0.1, max_steps=25))
    losses = [r.loss for r in trace.records]
    assert losses[-1] < losses[0]
    assert min(losses) < 1e-3
    np.testing.assert_allclose(trace.final_point, [0.6, 0.6], atol=0.05)


def test_descend_follows_the_update_rule_exactly():
    evaluator = make_evaluator(Sphere(dim=2, center=0.5), 10)
    config = DescentConfig(learning_rate=0.05, max_steps=3, clip_norm=1.0)
    start = np.array([0.9, 0.5])
    trace = descend(evaluator, start, config)
    # Gradient at start is (0.8, 0); norm < 1 so no clipping applies.
    expected_second = start - 0.05 * np.array([0.8, 0.0])
    np.testing.assert_allclose(trace.records[1].point, expected_second,
                               atol=1e-12)


def test_descend_clips_large_gradients():
    problem = Sphere(dim=1, center=0.0, lower=-100.0, upper=100.0)
    evaluator = make_evaluator(problem, 5)
    config = DescentConfig(learning_rate=0.1, max_steps=2, clip_norm=1.0)
    trace = descend(evaluator, np.array([1.0]), config)
    # Unit-space gradient is huge; the step is exactly lr * clip_norm.
    assert trace.records[0].point[0] - trace.records[1].point[0] == \
        pytest.approx(0.1)


def test_descend_stays_inside_the_unit_cube():
    evaluator = make_evaluator(Sphere(dim=1, center=0.0), 10)
    config = DescentConfig(learning_rate=2.0, max_steps=8)
    trace = descend(evaluator, np.array([0.2]), config)
    for rec in trace.records:
        assert 0.0 <= rec.point[0] <= 1.0


def test_max_steps_reason():
    evaluator = make_evaluator(Sphere(dim=2, center=0.6), 100)
    trace = descend(evaluator, np.full(2, 0.2), DescentConfig(max_steps=4))
    assert len(trace) == 4
    assert trace.reason == REASON_MAX_STEPS


def test_stagnation_on_constant_loss_costs_window_plus_one():
    evaluator = make_evaluator(ConstantLoss(dim=2), 50)
    config = DescentConfig(stagnation_window=3, max_steps=25)
    trace = descend(evaluator, np.full(2, 0.5), config)
    # First evaluation improves from +inf; the next window evaluations stall.
    assert len(trace) == 4
    assert trace.reason == REASON_STAGNATION


def test_stagnation_window_is_configurable():
    evaluator = make_evaluator(ConstantLoss(dim=1), 50)
    trace = descend(evaluator, np.full(1, 0.4),
                    DescentConfig(stagnation_window=5))
    assert len(trace) == 6
    assert trace.reason == REASON_STAGNATION


def test_improvement_below_tolerance_counts_as_a_stall():
    # lr small enough that per-step improvement stays under the tolerance.
    evaluator = make_evaluator(Sphere(dim=1, center=0.0), 50)
    config = DescentConfig(learning_rate=1e-9, stagnation_window=2,
                           stagnation_tolerance=1.0, max_steps=25)
    trace = descend(evaluator, np.array([0.9]), config)
    assert trace.reason == REASON_STAGNATION
    assert len(trace) == 3


def test_budget_exhaustion_reason_and_exact_consumption():
    evaluator = make_evaluator(Sphere(dim=2, center=0.6), 3)
    trace = descend(evaluator, np.full(2, 0.1), DescentConfig(max_steps=25))
    assert len(trace) == 3
    assert trace.reason == REASON_BUDGET
    assert evaluator.budget.exhausted


def test_gradient_free_problem_returns_empty_trace():
    problem = GradientFreeView(Sphere(dim=2))
    evaluator = make_evaluator(problem, 10)
    trace = descend(evaluator, np.full(2, 0.5))
    assert len(trace) == 0
    assert trace.reason == REASON_NO_GRADIENT
    assert trace.final_point is None
    assert evaluator.budget.used == 0


def test_nan_gradient_takes_zero_steps_until_stagnation():
    evaluator = make_evaluator(NanGradient(dim=2), 20)
    trace = descend(evaluator, np.full(2, 0.3),
                    DescentConfig(stagnation_window=3))
    # The point never moves, so the loss repeats and stagnation fires.
    points = np.array([r.point for r in trace.records])
    assert np.all(points == points[0])
    assert trace.reason == REASON_STAGNATION
    assert len(trace) == 4


def test_trace_len_matches_budget_spend():
    evaluator = make_evaluator(Sphere(dim=2, center=0.6), 30)
    before = evaluator.budget.used
    trace = descend(evaluator, np.full(2, 0.15), DescentConfig(max_steps=7))
    assert evaluator.budget.used - before == len(trace)


def test_descend_records_phase_tags():
    evaluator = make_evaluator(Sphere(dim=1, center=0.5), 5)
    trace = descend(evaluator, np.array([0.2]), DescentConfig(max_steps=2),
                    phase={"trial": 3, "descent": 1})
    assert all(r.phase == {"trial": 3, "descent": 1} for r in trace.records)


def test_empty_trace_default():
    trace = DescentTrace()
    assert len(trace) == 0
    assert trace.reason == REASON_MAX_STEPS


def test_rand_descents_spends_whole_budget_and_restarts():
    problem = Sphere(dim=2, center=0.6)
    budget = Budget(60)
    log = RunLog(budget)
    best = rand_descents_minimize(problem, budget, rng=make_rng(0), log=log)
    assert len(log) == 60
    restarts = {r.phase["descent"] for r in log}
    assert len(restarts) > 1
    assert best.loss == min(r.loss for r in log)


def test_rand_descents_requires_rng_and_gradients():
    with pytest.raises(ValueError):
        rand_descents_minimize(Sphere(dim=2), Budget(10))
    with pytest.raises(ValueError):
        rand_descents_minimize(GradientFreeView(Sphere(dim=2)), Budget(10),
                               rng=make_rng(0))

"""Optimizer orchestration: budgets, determinism, phases, and the registry."""
import numpy as np
import pytest

from leapopt.core import Budget, RunLog, make_rng
from leapopt.optimizers import (
    BoLeapConfig,
    OptimizerResult,
    bo_leap_minimize,
    bo_minimize,
    cma_with_grad_step_minimize,
    optimizer_names,
    random_search_minimize,
    run_optimizer,
)
from leapopt.problems import GradientFreeView
from helpers import Sphere

ALL_NAMES = ["bo", "bo-leap", "cma-es", "cma-grad", "rand", "rand-descents"]


def run_named(name, problem, budget_steps, seed=0, options=None):
    budget = Budget(budget_steps)
    log = RunLog(budget)
    result = run_optimizer(name, problem, budget, make_rng(seed), log=log,
                           options=options)
    return result, log


def test_registry_names():
    assert optimizer_names() == ALL_NAMES


def test_unknown_optimizer_rejected_before_running():
    with pytest.raises(ValueError, match="known:"):
        run_optimizer("sgd", Sphere(dim=2), Budget(5), make_rng(0))


def test_unknown_option_keys_rejected_before_running():
    problem = Sphere(dim=2)
    budget = Budget(5)
    with pytest.raises(ValueError, match="unknown option"):
        run_optimizer("rand", problem, budget, make_rng(0),
                      options={"learning_rate": 0.1})
    assert budget.used == 0


@pytest.mark.parametrize("name", ALL_NAMES)
def test_every_optimizer_spends_the_exact_budget(name):
    problem = Sphere(dim=3, center=0.6)
    result, log = run_named(name, problem, 40)
    assert len(log) == 40
    assert log.budget.exhausted
    assert result.best_loss == min(r.loss for r in log)


@pytest.mark.parametrize("name", ALL_NAMES)
def test_every_optimizer_is_deterministic_per_seed(name):
    problem = Sphere(dim=3, center=0.6)

    def losses(seed):
        _, log = run_named(name, problem, 30, seed=seed)
        return np.array([r.loss for r in log])

    np.testing.assert_array_equal(losses(5), losses(5))


def test_optimizer_result_steps_to_best():
    budget = Budget(3)
    log = RunLog(budget)
    problem = Sphere(dim=1, center=0.5)
    random_search_minimize(problem, budget, make_rng(1), log)
    result = OptimizerResult.from_log(log)
    assert result.steps_to_best == result.best.step_index + 1
    assert 1 <= result.steps_to_best <= 3


def test_random_search_requires_rng():
    with pytest.raises(ValueError):
        random_search_minimize(Sphere(dim=2), Budget(5))


def test_bo_warmup_then_model_guided():
    problem = Sphere(dim=2, center=0.6)
    budget = Budget(30)
    log = RunLog(budget)
    result = bo_minimize(problem, budget, rng=make_rng(2), log=log)
    assert len(log) == 30
    # After warmup the surrogate homes in well below random-baseline levels.
    assert result.best_loss < 0.05


def test_bo_beats_random_on_a_smooth_bowl():
    problem = Sphere(dim=2, center=0.55)
    bo_losses = []
    rand_losses = []
    for seed in range(3):
        r_bo, _ = run_named("bo", problem, 25, seed=seed)
        r_rand, _ = run_named("rand", problem, 25, seed=seed)
        bo_losses.append(r_bo.best_loss)
        rand_losses.append(r_rand.best_loss)
    assert np.median(bo_losses) < np.median(rand_losses)


def test_bo_leap_phase_tags_cover_the_whole_log():
    problem = Sphere(dim=3, center=0.6)
    result, log = run_named("bo-leap", problem, 120,
                            options={"local_steps": 50})
    for rec in log:
        assert rec.phase is not None
        assert "trial" in rec.phase
        assert ("generation" in rec.phase) != ("descent" in rec.phase)
    trials = sorted({r.phase["trial"] for r in log})
    assert trials[0] == 0
    assert trials == list(range(len(trials)))
    assert len(trials) >= 2  # 120 evaluations at 50 per trial


def test_bo_leap_descent_phases_follow_generations():
    problem = Sphere(dim=2, center=0.6)
    _, log = run_named("bo-leap", problem, 60)
    kinds = ["generation" if "generation" in r.phase else "descent"
             for r in log]
    assert kinds[0] == "generation"
    assert "descent" in kinds


def test_bo_leap_skips_descents_without_gradients():
    problem = GradientFreeView(Sphere(dim=2, center=0.6))
    budget = Budget(50)
    log = RunLog(budget)
    bo_leap_minimize(problem, budget, rng=make_rng(3), log=log)
    assert len(log) == 50
    assert all("generation" in r.phase for r in log)


def test_bo_leap_improves_on_sphere():
    problem = Sphere(dim=3, center=0.6)
    result, _ = run_named("bo-leap", problem, 150)
    assert result.best_loss < 1e-4


def test_bo_leap_local_steps_clamped_to_tiny_budgets():
    problem = Sphere(dim=2, center=0.6)
    result, log = run_named("bo-leap", problem, 7)
    assert len(log) == 7


def test_bo_leap_config_validation():
    with pytest.raises(ValueError):
        BoLeapConfig(local_steps=0)
    with pytest.raises(ValueError):
        BoLeapConfig(sigma_init_scale=0.0)


def test_cma_grad_zero_alpha_matches_plain_cma_bitwise():
    problem = Sphere(dim=3, center=0.6)

    def run(name, options):
        _, log = run_named(name, problem, 50, seed=4, options=options)
        return log

    plain = run("cma-es", None)
    hybrid = run("cma-grad", {"gradient_alpha": 0.0})
    assert len(plain) == len(hybrid)
    for a, b in zip(plain, hybrid):
        np.testing.assert_array_equal(a.point, b.point)
        assert a.loss == b.loss


def test_cma_grad_evaluates_the_recombined_mean():
    problem = Sphere(dim=2, center=0.6)
    _, log = run_named("cma-grad", problem, 33)
    kinds = [r.phase.get("kind") for r in log if r.phase]
    assert "grad-step" in kinds


def test_cma_grad_rejects_gradient_free_problems():
    problem = GradientFreeView(Sphere(dim=2))
    with pytest.raises(ValueError):
        cma_with_grad_step_minimize(problem, Budget(20), rng=make_rng(0),
                                    gradient_alpha=0.05)


def test_optimizer_options_flow_through():
    problem = Sphere(dim=2, center=0.6)
    result, log = run_named("cma-es", problem, 30,
                            options={"population_size": 6, "sigma0": 0.2})
    generations = [r.phase["generation"] for r in log]
    assert generations.count(0) == 6


def test_bo_leap_accepts_descent_and_acquisition_options():
    problem = Sphere(dim=2, center=0.6)
    result, log = run_named(
        "bo-leap", problem, 40,
        options={"learning_rate": 0.1, "beta": 2.0, "population_size": 6,
                 "local_steps": 20},
    )
    assert len(log) == 40

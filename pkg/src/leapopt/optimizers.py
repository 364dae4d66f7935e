"""BO-Leap orchestration plus the remaining baselines and the registry.

Optimizer names used by the harness:

  rand           uniform random search
  cma-es         generational CMA-ES (weighted recombination)
  rand-descents  clipped gradient descents from random starts
  bo             classic GP + LCB Bayesian optimization
  bo-leap        three-level search: BO picks a start, a CMA-ES style
                 population refines it, clipped descents dive from the
                 population mean; every evaluation feeds the GP
  cma-grad       CMA-ES whose recombined mean takes one clipped gradient step
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cmaes import (
    BASELINE_SIGMA0,
    CmaConfig,
    PopulationState,
    _generational_cma,
    cma_es_minimize,
    sample_population,
    select_best,
    subset_mean,
    update_distribution,
)
from .core import Budget, EvaluationRecord, Evaluator, RunLog
from .descent import DescentConfig, clip_gradient, descend, rand_descents_minimize
from .gp import AcquisitionConfig, GPModel, acquire

__all__ = [
    "BoLeapConfig",
    "OptimizerResult",
    "bo_leap_minimize",
    "random_search_minimize",
    "bo_minimize",
    "cma_with_grad_step_minimize",
    "run_optimizer",
    "optimizer_names",
]

BO_WARMUP = 5  # uniform evaluations before the first GP fit in plain BO


@dataclass(frozen=True)
class BoLeapConfig:
    """Knobs for the three levels: acquisition, population, descent.

    `cma = None` derives tutorial constants for the problem dimension with
    K=10.  `sigma_init_scale` is the fresh population's step size in the unit
    cube.  Phases end after `local_steps` evaluations (clamped to the total
    budget for tiny runs).
    """

    local_steps: int = 100
    sigma_init_scale: float = 0.15
    cma: Optional[CmaConfig] = None
    descent: DescentConfig = field(default_factory=DescentConfig)
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)

    def __post_init__(self):
        if self.local_steps < 1:
            raise ValueError("local_steps must be positive")
        if self.sigma_init_scale <= 0.0:
            raise ValueError("sigma_init_scale must be positive")


@dataclass
class OptimizerResult:
    """Best record plus the full log; per-record phase tags live in the log."""

    best: EvaluationRecord
    log: RunLog

    @staticmethod
    def from_log(log: RunLog) -> "OptimizerResult":
        return OptimizerResult(best=log.best(), log=log)

    @property
    def best_loss(self) -> float:
        return self.best.loss

    @property
    def steps_to_best(self) -> int:
        """1-based count of evaluations until the best loss first appeared."""
        return self.best.step_index + 1


def random_search_minimize(
    problem,
    budget: Budget,
    rng: np.random.Generator = None,
    log: RunLog = None,
) -> OptimizerResult:
    """Uniform samples in the unit cube until budget exhaustion."""
    if rng is None:
        raise ValueError("random_search_minimize requires an rng")
    evaluator = Evaluator(problem, budget, log)
    while not budget.exhausted:
        evaluator(rng.uniform(size=problem.dimension))
    return OptimizerResult.from_log(evaluator.log)


def bo_minimize(
    problem,
    budget: Budget,
    config: AcquisitionConfig = None,
    rng: np.random.Generator = None,
    log: RunLog = None,
    warmup: int = BO_WARMUP,
) -> OptimizerResult:
    """Classic BO loop: fit, acquire one point, evaluate, append."""
    if rng is None:
        raise ValueError("bo_minimize requires an rng")
    if config is None:
        config = AcquisitionConfig()
    evaluator = Evaluator(problem, budget, log)
    model = GPModel(problem.dimension)
    while not budget.exhausted:
        if model.n_points < warmup:
            point = rng.uniform(size=problem.dimension)
        else:
            try:
                model.maybe_refit(rng)
                point = acquire(model, config, rng)
            except Exception as exc:
                warnings.warn(
                    f"acquisition failed ({exc}); falling back to a uniform sample",
                    RuntimeWarning,
                )
                point = rng.uniform(size=problem.dimension)
        rec = evaluator(point)
        model.add(rec.point, rec.loss)
    return OptimizerResult.from_log(evaluator.log)


def bo_leap_minimize(
    problem,
    budget: Budget,
    config: BoLeapConfig = None,
    rng: np.random.Generator = None,
    log: RunLog = None,
) -> OptimizerResult:
    """Three-level search: GP surrogate -> semi-local population -> descents.

    Each trial refreshes the GP once, acquires a start point, and runs a
    fresh population there.  Every generation evaluates K candidates, starts
    a clipped descent from the unweighted mean of the best half (skipped for
    gradient-free problems), re-centers the distribution on the descent's
    final point, and updates sigma and C.  A phase ends once it has consumed
    `local_steps` evaluations; every record carries (trial, generation) or
    (trial, descent) tags and is added to the surrogate's dataset.
    """
    if rng is None:
        raise ValueError("bo_leap_minimize requires an rng")
    if config is None:
        config = BoLeapConfig()
    dim = problem.dimension
    cma_cfg = config.cma if config.cma is not None else CmaConfig.for_dimension(dim)
    local_steps = min(config.local_steps, budget.max_steps)
    evaluator = Evaluator(problem, budget, log)
    model = GPModel(dim)

    trial = 0
    while not budget.exhausted:
        try:
            model.maybe_refit(rng)
            start = acquire(model, config.acquisition, rng)
        except Exception as exc:
            warnings.warn(
                f"acquisition failed ({exc}); falling back to a uniform sample",
                RuntimeWarning,
            )
            start = rng.uniform(size=dim)
        state = PopulationState.initial(start, config.sigma_init_scale)
        phase_start = budget.used
        generation = 0
        while not budget.exhausted and budget.used - phase_start < local_steps:
            candidates = sample_population(state, cma_cfg.population_size, rng)
            losses = []
            for candidate in candidates:
                if budget.exhausted:
                    break
                rec = evaluator(
                    candidate, phase={"trial": trial, "generation": generation}
                )
                model.add(rec.point, rec.loss)
                losses.append(rec.loss)
            if len(losses) < cma_cfg.population_size:
                break
            idx = select_best(candidates, np.array(losses), cma_cfg.parent_count)
            best_pts = candidates[idx]
            descent_start = subset_mean(best_pts)
            new_mean = descent_start
            if evaluator.gradient_available and not budget.exhausted:
                trace = descend(
                    evaluator,
                    descent_start,
                    config.descent,
                    phase={"trial": trial, "descent": generation},
                )
                for rec in trace.records:
                    model.add(rec.point, rec.loss)
                if trace.records:
                    new_mean = trace.final_point
            state = update_distribution(state, new_mean, best_pts, cma_cfg)
            generation += 1
        trial += 1
    return OptimizerResult.from_log(evaluator.log)


def cma_with_grad_step_minimize(
    problem,
    budget: Budget,
    config: CmaConfig = None,
    rng: np.random.Generator = None,
    log: RunLog = None,
    gradient_alpha: float = 0.05,
    clip_norm: float = 1.0,
    sigma0: float = BASELINE_SIGMA0,
) -> OptimizerResult:
    """CMA-ES whose recombined mean is shifted by one clipped gradient step.

    The shifted mean both seeds the next generation and drives the path and
    covariance updates.  With gradient_alpha == 0 the mean evaluation is
    skipped entirely and the run is bit-identical to cma_es_minimize.
    """
    if rng is None:
        raise ValueError("cma_with_grad_step_minimize requires an rng")
    if config is None:
        config = CmaConfig.for_dimension(problem.dimension)
    mean_hook = None
    if gradient_alpha > 0.0:
        if not problem.gradient_available:
            raise ValueError("gradient step requires a gradient-capable problem")

        def mean_hook(evaluator, state, mean):
            rec = evaluator(
                mean, phase={"generation": state.generation, "kind": "grad-step"}
            )
            if rec.gradient is None:
                return mean
            step = gradient_alpha * clip_gradient(rec.gradient, clip_norm)
            return np.clip(mean - step, 0.0, 1.0)

    evaluator = Evaluator(problem, budget, log)
    _generational_cma(evaluator, config, rng, sigma0=sigma0, mean_hook=mean_hook)
    return OptimizerResult.from_log(evaluator.log)


def _opt(options: dict, key: str, default, cast):
    if key not in options:
        return default
    value = options.pop(key)
    if value is None:
        return None
    return cast(value)


def _run_rand(problem, budget, rng, log, options):
    return random_search_minimize(problem, budget, rng, log)


def _run_cma_es(problem, budget, rng, log, options):
    cfg = CmaConfig.for_dimension(
        problem.dimension,
        population_size=_opt(options, "population_size", 10, int),
        parent_count=_opt(options, "parent_count", None, int),
    )
    sigma0 = _opt(options, "sigma0", BASELINE_SIGMA0, float)
    run_log = log if log is not None else RunLog(budget)
    cma_es_minimize(problem, budget, cfg, rng, run_log, sigma0=sigma0)
    return OptimizerResult.from_log(run_log)


def _descent_config(options: dict) -> DescentConfig:
    return DescentConfig(
        learning_rate=_opt(options, "learning_rate", 0.05, float),
        max_steps=_opt(options, "max_steps", 25, int),
        stagnation_window=_opt(options, "stagnation_window", 3, int),
        stagnation_tolerance=_opt(options, "stagnation_tolerance", None, float),
        clip_norm=_opt(options, "clip_norm", 1.0, float),
    )


def _run_rand_descents(problem, budget, rng, log, options):
    cfg = _descent_config(options)
    run_log = log if log is not None else RunLog(budget)
    rand_descents_minimize(problem, budget, cfg, rng, run_log)
    return OptimizerResult.from_log(run_log)


def _acquisition_config(options: dict) -> AcquisitionConfig:
    return AcquisitionConfig(
        exploration_coefficient=_opt(options, "beta", 1.0, float),
        candidate_count=_opt(options, "candidate_count", 256, int),
    )


def _run_bo(problem, budget, rng, log, options):
    acq = _acquisition_config(options)
    warmup = _opt(options, "warmup", BO_WARMUP, int)
    return bo_minimize(problem, budget, acq, rng, log, warmup=warmup)


def _run_bo_leap(problem, budget, rng, log, options):
    cma_cfg = None
    population_size = _opt(options, "population_size", None, int)
    parent_count = _opt(options, "parent_count", None, int)
    if population_size is not None or parent_count is not None:
        cma_cfg = CmaConfig.for_dimension(
            problem.dimension,
            population_size=population_size if population_size is not None else 10,
            parent_count=parent_count,
        )
    cfg = BoLeapConfig(
        local_steps=_opt(options, "local_steps", 100, int),
        sigma_init_scale=_opt(options, "sigma_init_scale", 0.15, float),
        cma=cma_cfg,
        descent=_descent_config(options),
        acquisition=_acquisition_config(options),
    )
    return bo_leap_minimize(problem, budget, cfg, rng, log)


def _run_cma_grad(problem, budget, rng, log, options):
    cfg = CmaConfig.for_dimension(
        problem.dimension,
        population_size=_opt(options, "population_size", 10, int),
        parent_count=_opt(options, "parent_count", None, int),
    )
    return cma_with_grad_step_minimize(
        problem,
        budget,
        cfg,
        rng,
        log,
        gradient_alpha=_opt(options, "gradient_alpha", 0.05, float),
        clip_norm=_opt(options, "clip_norm", 1.0, float),
        sigma0=_opt(options, "sigma0", BASELINE_SIGMA0, float),
    )


_DESCENT_KEYS = {
    "learning_rate",
    "max_steps",
    "stagnation_window",
    "stagnation_tolerance",
    "clip_norm",
}
_ACQUISITION_KEYS = {"beta", "candidate_count"}

_OPTIMIZERS = {
    "rand": (_run_rand, set()),
    "cma-es": (_run_cma_es, {"population_size", "parent_count", "sigma0"}),
    "rand-descents": (_run_rand_descents, set(_DESCENT_KEYS)),
    "bo": (_run_bo, _ACQUISITION_KEYS | {"warmup"}),
    "bo-leap": (
        _run_bo_leap,
        _DESCENT_KEYS
        | _ACQUISITION_KEYS
        | {"local_steps", "sigma_init_scale", "population_size", "parent_count"},
    ),
    "cma-grad": (
        _run_cma_grad,
        {"population_size", "parent_count", "gradient_alpha", "clip_norm", "sigma0"},
    ),
}


def optimizer_names() -> list:
    return sorted(_OPTIMIZERS)


def run_optimizer(
    name: str,
    problem,
    budget: Budget,
    rng: np.random.Generator,
    log: RunLog = None,
    options: dict = None,
) -> OptimizerResult:
    """Run a registered optimizer; `options` holds its flat config settings.

    Unknown optimizer names and unknown option keys raise ValueError before
    any evaluation happens.
    """
    if name not in _OPTIMIZERS:
        raise ValueError(
            f"unknown optimizer '{name}'; known: {', '.join(optimizer_names())}"
        )
    runner, allowed = _OPTIMIZERS[name]
    opts = dict(options) if options else {}
    unknown = set(opts) - allowed
    if unknown:
        raise ValueError(
            f"unknown option(s) for optimizer '{name}': {', '.join(sorted(unknown))}"
        )
    return runner(problem, budget, rng, log, opts)

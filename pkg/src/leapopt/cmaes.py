"""CMA-ES machinery: population sampling, selection, and distribution updates.

Used in two roles: the standalone generational baseline, and the semi-local
layer inside BO-Leap (which injects its own post-descent mean into
`update_distribution` instead of the weighted recombination point).

All constants follow the standard tutorial formulas, computed once per
dimension in `CmaConfig.for_dimension` and frozen.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import Budget, EvaluationRecord, Evaluator, RunLog

__all__ = [
    "CmaConfig",
    "PopulationState",
    "sample_population",
    "select_best",
    "subset_mean",
    "update_distribution",
    "cma_es_minimize",
]

DEFAULT_POPULATION = 10
BASELINE_SIGMA0 = 0.3

SIGMA_MIN = 1e-8
SIGMA_MAX = 1e4
MIN_EIGENVALUE = 1e-12


@dataclass(frozen=True)
class CmaConfig:
    """Per-dimension CMA-ES constants (selection weights and learning rates)."""

    dim: int
    population_size: int
    parent_count: int
    weights: np.ndarray
    mu_eff: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    chi_n: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if not (0 < self.parent_count <= self.population_size):
            raise ValueError("require 0 < parent_count <= population_size")
        if w.shape != (self.parent_count,) or np.any(w <= 0.0):
            raise ValueError("weights must be positive, one per parent")
        if np.any(np.diff(w) > 0.0):
            raise ValueError("weights must be non-increasing")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    @staticmethod
    def for_dimension(
        dim: int,
        population_size: int = DEFAULT_POPULATION,
        parent_count: int = None,
    ) -> "CmaConfig":
        """Tutorial defaults: log-rank weights and rates derived from (d, mu_eff)."""
        if dim < 1 or population_size < 2:
            raise ValueError("need dim >= 1 and population_size >= 2")
        k = population_size
        mu = parent_count if parent_count is not None else k // 2
        raw = np.log((k + 1) / 2.0) - np.log(np.arange(1, mu + 1))
        if np.any(raw <= 0.0):
            raise ValueError("parent_count too large for positive log-rank weights")
        w = raw / raw.sum()
        mu_eff = 1.0 / float(np.sum(w * w))
        d = float(dim)
        c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0)
        d_sigma = (
            1.0
            + 2.0 * max(0.0, np.sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0)
            + c_sigma
        )
        c_c = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d)
        c_1 = 2.0 / ((d + 1.3) ** 2 + mu_eff)
        c_mu = min(
            1.0 - c_1,
            2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0) ** 2 + mu_eff),
        )
        chi_n = np.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))
        return CmaConfig(
            dim=dim,
            population_size=k,
            parent_count=mu,
            weights=w,
            mu_eff=mu_eff,
            c_sigma=c_sigma,
            d_sigma=d_sigma,
            c_c=c_c,
            c_1=c_1,
            c_mu=c_mu,
            chi_n=float(chi_n),
        )


@dataclass(frozen=True)
class PopulationState:
    """Sampling distribution N(mean, sigma^2 C) plus the two evolution paths."""

    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    generation: int = 0

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "p_sigma", np.asarray(self.p_sigma, dtype=float))
        object.__setattr__(self, "p_c", np.asarray(self.p_c, dtype=float))
        d = mean.size
        if cov.shape != (d, d) or self.p_sigma.shape != (d,) or self.p_c.shape != (d,):
            raise ValueError("state fields must share the mean's dimension")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")

    @staticmethod
    def initial(mean: np.ndarray, sigma: float) -> "PopulationState":
        mean = np.asarray(mean, dtype=float)
        d = mean.size
        return PopulationState(
            mean=mean.copy(),
            sigma=float(sigma),
            cov=np.eye(d),
            p_sigma=np.zeros(d),
            p_c=np.zeros(d),
            generation=0,
        )


def _decompose(cov: np.ndarray) -> tuple:
    """Eigendecomposition with non-PD repair (eigenvalues clamped at 1e-12)."""
    evals, evecs = np.linalg.eigh(cov)
    if float(evals.min()) < MIN_EIGENVALUE:
        warnings.warn(
            "covariance not positive definite; clamping eigenvalues", RuntimeWarning
        )
        evals = np.clip(evals, MIN_EIGENVALUE, None)
    return evals, evecs


def sample_population(
    state: PopulationState, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw `count` candidates from N(mean, sigma^2 C), clamped to the unit cube.

    One eigendecomposition serves the whole generation.
    """
    evals, evecs = _decompose(state.cov)
    sqrt_cov = evecs * np.sqrt(evals)[None, :]
    z = rng.standard_normal((count, state.mean.size))
    draws = state.mean[None, :] + state.sigma * (z @ sqrt_cov.T)
    return np.clip(draws, 0.0, 1.0)


def select_best(
    candidates: np.ndarray, losses: np.ndarray, parent_count: int
) -> np.ndarray:
    """Indices of the `parent_count` lowest losses, ascending, ties by index."""
    candidates = np.asarray(candidates)
    losses = np.asarray(losses, dtype=float)
    if len(candidates) != len(losses):
        raise ValueError("candidates and losses must have equal length")
    if not (0 < parent_count <= len(losses)):
        raise ValueError("parent_count out of range")
    return np.argsort(losses, kind="stable")[:parent_count]


def subset_mean(points: np.ndarray) -> np.ndarray:
    """Unweighted arithmetic mean of the selected candidates."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise ValueError("subset_mean of an empty set")
    return points.mean(axis=0)


def update_distribution(
    state: PopulationState,
    new_mean: np.ndarray,
    best: np.ndarray,
    config: CmaConfig,
) -> PopulationState:
    """One CMA-ES step-size and covariance update around a supplied new mean.

    `best` holds the selected candidates (ascending loss), matched to
    `config.weights`.  The mean displacement is taken from `new_mean`, which
    the caller chooses: weighted recombination for the plain baseline, the
    final descent point for BO-Leap.
    """
    new_mean = np.asarray(new_mean, dtype=float)
    best = np.atleast_2d(np.asarray(best, dtype=float))
    d = state.mean.size
    if new_mean.shape != (d,) or best.shape != (config.parent_count, d):
        raise ValueError("shape mismatch in update_distribution")

    generation = state.generation + 1
    y_w = (new_mean - state.mean) / state.sigma
    evals, evecs = _decompose(state.cov)
    inv_sqrt = (evecs / np.sqrt(evals)[None, :]) @ evecs.T

    cs, dsig = config.c_sigma, config.d_sigma
    cc, c1, cmu = config.c_c, config.c_1, config.c_mu
    mu_eff, chi_n, w = config.mu_eff, config.chi_n, config.weights

    p_sigma = (1.0 - cs) * state.p_sigma + np.sqrt(cs * (2.0 - cs) * mu_eff) * (
        inv_sqrt @ y_w
    )
    p_norm = float(np.linalg.norm(p_sigma))
    unbias = np.sqrt(1.0 - (1.0 - cs) ** (2 * generation))
    h_sig = 1.0 if p_norm / unbias < (1.4 + 2.0 / (d + 1.0)) * chi_n else 0.0

    p_c = (1.0 - cc) * state.p_c + h_sig * np.sqrt(cc * (2.0 - cc) * mu_eff) * y_w

    ys = (best - state.mean[None, :]) / state.sigma
    rank_mu = np.einsum("i,ij,ik->jk", w, ys, ys)
    cov = (
        (1.0 - c1 - cmu * float(w.sum())) * state.cov
        + c1 * (np.outer(p_c, p_c) + (1.0 - h_sig) * cc * (2.0 - cc) * state.cov)
        + cmu * rank_mu
    )

    sigma = state.sigma * float(np.exp((cs / dsig) * (p_norm / chi_n - 1.0)))
    if sigma < SIGMA_MIN or sigma > SIGMA_MAX:
        warnings.warn("step size left [1e-8, 1e4]; clamping", RuntimeWarning)
        sigma = min(max(sigma, SIGMA_MIN), SIGMA_MAX)

    return PopulationState(
        mean=new_mean.copy(),
        sigma=sigma,
        cov=cov,
        p_sigma=p_sigma,
        p_c=p_c,
        generation=generation,
    )


def _generational_cma(
    evaluator: Evaluator,
    config: CmaConfig,
    rng: np.random.Generator,
    sigma0: float = BASELINE_SIGMA0,
    mean_hook=None,
) -> None:
    """Generational loop shared by the plain baseline and the gradient hybrid.

    `mean_hook(evaluator, state, new_mean) -> new_mean` may adjust the
    recombined mean before the distribution update; None leaves it untouched.
    A generation interrupted by budget exhaustion keeps its committed records
    but triggers no update.
    """
    budget = evaluator.budget
    state = PopulationState.initial(rng.uniform(size=config.dim), sigma0)
    while not budget.exhausted:
        candidates = sample_population(state, config.population_size, rng)
        losses = []
        for candidate in candidates:
            if budget.exhausted:
                break
            rec = evaluator(candidate, phase={"generation": state.generation})
            losses.append(rec.loss)
        if len(losses) < config.population_size:
            break
        idx = select_best(candidates, np.array(losses), config.parent_count)
        best_pts = candidates[idx]
        new_mean = config.weights @ best_pts
        if mean_hook is not None and not budget.exhausted:
            new_mean = mean_hook(evaluator, state, new_mean)
        state = update_distribution(state, new_mean, best_pts, config)


def cma_es_minimize(
    problem,
    budget: Budget,
    config: CmaConfig = None,
    rng: np.random.Generator = None,
    log: RunLog = None,
    sigma0: float = BASELINE_SIGMA0,
) -> EvaluationRecord:
    """Standard generational CMA-ES from a uniform random start point."""
    if rng is None:
        raise ValueError("cma_es_minimize requires an rng")
    evaluator = Evaluator(problem, budget, log)
    if config is None:
        config = CmaConfig.for_dimension(problem.dimension)
    _generational_cma(evaluator, config, rng, sigma0=sigma0)
    return evaluator.log.best()

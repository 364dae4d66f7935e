"""Gaussian-process surrogate: SE-ARD kernel, exact posterior, LCB acquisition.

Inputs live in the optimizer's unit cube.  Observed losses are standardized
(zero mean, unit scale) inside the model, so hyperparameter defaults and their
box constraints are scale-free; posterior queries are de-standardized on the
way out.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy import optimize as sopt

__all__ = [
    "GPHyperparams",
    "GPModel",
    "AcquisitionConfig",
    "GPFitError",
    "kernel",
    "posterior",
    "fit_hyperparams",
    "acquire",
]

DEFAULT_LENGTH_SCALE = 0.5
DEFAULT_SIGNAL_VARIANCE = 1.0
DEFAULT_NOISE_VARIANCE = 1e-4

# Escalating diagonal jitter tried until the Cholesky factorization succeeds.
JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)

MAX_POINTS = 1200      # exact-GP dataset cap
KEEP_BEST = 200        # lowest-loss points that survive the cap
FIT_SUBSAMPLE = 256    # points used when refitting hyperparameters
REFIT_INTERVAL = 25    # new points between hyperparameter refits

PERTURB_COUNT = 10
PERTURB_SCALE = 0.05

_LOG_LENGTH_BOUNDS = (np.log(1e-3), np.log(1e3))
_LOG_SIGNAL_BOUNDS = (np.log(1e-8), np.log(1e4))
_LOG_NOISE_BOUNDS = (np.log(1e-10), np.log(1e1))
_LOG_2PI = np.log(2.0 * np.pi)


class GPFitError(RuntimeError):
    """Kernel matrix stayed singular through the whole jitter ladder."""


@dataclass(frozen=True)
class GPHyperparams:
    """SE-ARD kernel parameters, expressed in standardized output space."""

    signal_variance: float
    length_scales: np.ndarray
    noise_variance: float

    def __post_init__(self):
        scales = np.asarray(self.length_scales, dtype=float)
        object.__setattr__(self, "length_scales", scales)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        if self.signal_variance <= 0.0 or self.noise_variance <= 0.0:
            raise ValueError("kernel variances must be strictly positive")
        if scales.ndim != 1 or scales.size == 0 or np.any(scales <= 0.0):
            raise ValueError("length_scales must be a vector of positive reals")

    @property
    def dim(self) -> int:
        return self.length_scales.size

    @staticmethod
    def default(dim: int) -> "GPHyperparams":
        return GPHyperparams(
            DEFAULT_SIGNAL_VARIANCE,
            np.full(dim, DEFAULT_LENGTH_SCALE),
            DEFAULT_NOISE_VARIANCE,
        )

    def to_log_vector(self) -> np.ndarray:
        packed = np.concatenate(
            [self.length_scales, [self.signal_variance, self.noise_variance]]
        )
        return np.log(packed)

    @staticmethod
    def from_log_vector(theta: np.ndarray) -> "GPHyperparams":
        theta = np.asarray(theta, dtype=float)
        return GPHyperparams(
            float(np.exp(theta[-2])), np.exp(theta[:-2]), float(np.exp(theta[-1]))
        )


@dataclass(frozen=True)
class AcquisitionConfig:
    """Lower-confidence-bound acquisition settings."""

    exploration_coefficient: float = 1.0
    candidate_count: int = 256

    def __post_init__(self):
        if self.exploration_coefficient < 0.0:
            raise ValueError("exploration_coefficient must be non-negative")
        if self.candidate_count < 1:
            raise ValueError("candidate_count must be positive")


def kernel(x_i: np.ndarray, x_j: np.ndarray, hyperparams: GPHyperparams) -> float:
    """Squared-exponential ARD kernel for a single pair of points."""
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    if x_i.shape != x_j.shape or x_i.shape != (hyperparams.dim,):
        raise ValueError("kernel inputs must match the hyperparameter dimension")
    r = (x_i - x_j) / hyperparams.length_scales
    return float(hyperparams.signal_variance * np.exp(-0.5 * np.dot(r, r)))


def _kernel_matrix(a: np.ndarray, b: np.ndarray, hp: GPHyperparams) -> np.ndarray:
    sa = a / hp.length_scales
    sb = b / hp.length_scales
    d2 = (
        np.sum(sa * sa, axis=1)[:, None]
        + np.sum(sb * sb, axis=1)[None, :]
        - 2.0 * (sa @ sb.T)
    )
    np.clip(d2, 0.0, None, out=d2)
    return hp.signal_variance * np.exp(-0.5 * d2)


def _standardize_stats(losses: np.ndarray) -> tuple:
    if losses.size == 0:
        return 0.0, 1.0
    scale = float(np.std(losses))
    return float(np.mean(losses)), max(scale, 1e-8)


def _log_marginal_likelihood(X, y_std, theta, with_grad=True):
    """LML and its gradient w.r.t. log hyperparameters; (-inf, None) if singular."""
    hp = GPHyperparams.from_log_vector(theta)
    n = X.shape[0]
    kf = _kernel_matrix(X, X, hp)
    k_noisy = kf + hp.noise_variance * np.eye(n)
    try:
        chol = np.linalg.cholesky(k_noisy)
    except np.linalg.LinAlgError:
        return -np.inf, None
    alpha = sla.cho_solve((chol, True), y_std)
    lml = (
        -0.5 * float(y_std @ alpha)
        - float(np.sum(np.log(np.diag(chol))))
        - 0.5 * n * _LOG_2PI
    )
    if not with_grad:
        return lml, None
    k_inv = sla.cho_solve((chol, True), np.eye(n))
    w = np.outer(alpha, alpha) - k_inv
    grad = np.empty(theta.size)
    for d in range(X.shape[1]):
        scaled = (X[:, d][:, None] - X[:, d][None, :]) / hp.length_scales[d]
        grad[d] = 0.5 * np.sum(w * (kf * scaled * scaled))
    grad[-2] = 0.5 * np.sum(w * kf)
    grad[-1] = 0.5 * np.trace(w) * hp.noise_variance
    return lml, grad


def fit_hyperparams(points: np.ndarray, losses: np.ndarray) -> GPHyperparams:
    """Maximize the log marginal likelihood over log-hyperparameters.

    Runs L-BFGS-B from a few fixed starts and keeps the best result, so the
    returned parameters never score below the default initialization.  If
    every optimizer run fails, falls back to the defaults with a warning.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(losses, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("hyperparameter fitting needs at least 2 points")
    dim = X.shape[1]
    y_mean, y_scale = _standardize_stats(y)
    y_std = (y - y_mean) / y_scale

    default = GPHyperparams.default(dim)
    theta_default = default.to_log_vector()
    starts = [
        theta_default,
        np.log(np.concatenate([np.full(dim, 0.15), [1.0, 1e-3]])),
        np.log(np.concatenate([np.full(dim, 1.5), [1.0, 1e-2]])),
    ]
    bnds = [_LOG_LENGTH_BOUNDS] * dim + [_LOG_SIGNAL_BOUNDS, _LOG_NOISE_BOUNDS]

    def objective(theta):
        lml, grad = _log_marginal_likelihood(X, y_std, theta)
        if not np.isfinite(lml):
            return 1e25, np.zeros(theta.size)
        return -lml, -grad

    best_theta = theta_default
    best_lml, _ = _log_marginal_likelihood(X, y_std, theta_default, with_grad=False)
    converged = False
    for start in starts:
        try:
            res = sopt.minimize(
                objective,
                start,
                jac=True,
                method="L-BFGS-B",
                bounds=bnds,
                options={"maxiter": 60},
            )
        except (ValueError, np.linalg.LinAlgError):
            continue
        if not np.all(np.isfinite(res.x)):
            continue
        lml, _ = _log_marginal_likelihood(X, y_std, res.x, with_grad=False)
        converged = True
        if lml > best_lml:
            best_lml, best_theta = lml, res.x
    if not converged:
        warnings.warn(
            "GP hyperparameter fit diverged; keeping default initialization",
            RuntimeWarning,
        )
        return default
    return GPHyperparams.from_log_vector(best_theta)


class GPModel:
    """Exact GP over unit-cube points with a cached Cholesky factor.

    The cache is kept consistent with the dataset on every `add` via a rank-1
    Cholesky extension (falling back to a full rebuild when the appended pivot
    is numerically unsafe).  `maybe_refit` applies the dataset cap and the
    hyperparameter refit cadence; optimizers call it once per outer iteration.
    """

    def __init__(self, dim: int, hyperparams: GPHyperparams = None):
        self.dim = int(dim)
        self.hyperparams = hyperparams or GPHyperparams.default(self.dim)
        if self.hyperparams.dim != self.dim:
            raise ValueError("hyperparameter dimension mismatch")
        self._x = np.zeros((0, self.dim))
        self._y = np.zeros(0)
        self.y_mean = 0.0
        self.y_scale = 1.0
        self._chol = np.zeros((0, 0))
        self._alpha = np.zeros(0)
        self._jitter = 0.0
        self._since_fit = 0
        self._fitted = False

    @property
    def n_points(self) -> int:
        return self._x.shape[0]

    @property
    def points(self) -> np.ndarray:
        return self._x

    @property
    def losses(self) -> np.ndarray:
        return self._y

    def best_point(self) -> np.ndarray:
        if self.n_points == 0:
            raise ValueError("empty model has no best point")
        return self._x[int(np.argmin(self._y))].copy()

    def add(self, point: np.ndarray, loss: float) -> None:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dim,):
            raise ValueError("point dimension mismatch")
        self._x = np.vstack([self._x, point[None, :]])
        self._y = np.append(self._y, float(loss))
        self._since_fit += 1
        self._extend_cache()
        self._refresh_alpha()

    def _noisy_diag(self) -> float:
        return self.hyperparams.signal_variance + self.hyperparams.noise_variance

    def _rebuild_cache(self) -> None:
        n = self.n_points
        if n == 0:
            self._chol = np.zeros((0, 0))
            self._alpha = np.zeros(0)
            return
        k = _kernel_matrix(self._x, self._x, self.hyperparams)
        k[np.diag_indices(n)] += self.hyperparams.noise_variance
        for jitter in JITTER_LADDER:
            try:
                self._chol = np.linalg.cholesky(k + jitter * np.eye(n))
            except np.linalg.LinAlgError:
                continue
            self._jitter = jitter
            return
        raise GPFitError("kernel matrix singular after jitter escalation")

    def _extend_cache(self) -> None:
        n = self.n_points
        if n <= 1:
            self._rebuild_cache()
            return
        x_new = self._x[-1][None, :]
        k_vec = _kernel_matrix(self._x[:-1], x_new, self.hyperparams)[:, 0]
        kappa = self._noisy_diag() + self._jitter
        c = sla.solve_triangular(self._chol, k_vec, lower=True)
        pivot = kappa - float(c @ c)
        if pivot <= 1e-12 * kappa:
            self._rebuild_cache()
            return
        grown = np.zeros((n, n))
        grown[: n - 1, : n - 1] = self._chol
        grown[n - 1, : n - 1] = c
        grown[n - 1, n - 1] = np.sqrt(pivot)
        self._chol = grown

    def _refresh_alpha(self) -> None:
        self.y_mean, self.y_scale = _standardize_stats(self._y)
        y_std = (self._y - self.y_mean) / self.y_scale
        self._alpha = sla.cho_solve((self._chol, True), y_std)

    def posterior(self, queries: np.ndarray) -> tuple:
        """Posterior (means, variances) at a (m, dim) batch of unit points."""
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        if queries.shape[1] != self.dim:
            raise ValueError("query dimension mismatch")
        sig = self.hyperparams.signal_variance
        if self.n_points == 0:
            means = np.zeros(queries.shape[0])
            variances = np.full(queries.shape[0], sig)
        else:
            k_star = _kernel_matrix(self._x, queries, self.hyperparams)
            v = sla.solve_triangular(self._chol, k_star, lower=True)
            means = k_star.T @ self._alpha
            variances = np.clip(sig - np.sum(v * v, axis=0), 0.0, None)
        return (
            self.y_mean + self.y_scale * means,
            np.clip(self.y_scale**2 * variances, 0.0, None),
        )

    def maybe_refit(self, rng: np.random.Generator) -> None:
        """Apply the dataset cap, then refit hyperparameters on the cadence."""
        if self.n_points > MAX_POINTS:
            self._subsample_dataset(rng)
        if self.n_points >= 2 and (not self._fitted or self._since_fit >= REFIT_INTERVAL):
            if self.n_points > FIT_SUBSAMPLE:
                idx = np.sort(
                    rng.choice(self.n_points, size=FIT_SUBSAMPLE, replace=False)
                )
                fit_x, fit_y = self._x[idx], self._y[idx]
            else:
                fit_x, fit_y = self._x, self._y
            self.hyperparams = fit_hyperparams(fit_x, fit_y)
            self._fitted = True
            self._since_fit = 0
            self._rebuild_cache()
            self._refresh_alpha()

    def _subsample_dataset(self, rng: np.random.Generator) -> None:
        keep = np.argsort(self._y, kind="stable")[:KEEP_BEST]
        rest = np.setdiff1d(np.arange(self.n_points), keep)
        extra = rng.choice(rest, size=MAX_POINTS - KEEP_BEST, replace=False)
        idx = np.sort(np.concatenate([keep, extra]))
        self._x = self._x[idx]
        self._y = self._y[idx]
        self._rebuild_cache()
        self._refresh_alpha()


def posterior(model: GPModel, query: np.ndarray) -> tuple:
    """Posterior (mean, variance) at a single unit-cube point."""
    means, variances = model.posterior(np.asarray(query, dtype=float)[None, :])
    return float(means[0]), float(variances[0])


def acquire(
    model: GPModel,
    config: AcquisitionConfig,
    rng: np.random.Generator,
    candidates: np.ndarray = None,
) -> np.ndarray:
    """Pick the unit-cube candidate minimizing LCB = mean - beta * sqrt(var).

    The candidate set is `candidate_count` uniform samples plus 10 Gaussian
    perturbations (scale 0.05) of the best observed point; `candidates`
    overrides the sampled set (used by grid-oracle checks).
    """
    if candidates is None:
        cands = rng.uniform(size=(config.candidate_count, model.dim))
        if model.n_points > 0:
            best = model.best_point()
            noise = PERTURB_SCALE * rng.standard_normal((PERTURB_COUNT, model.dim))
            cands = np.vstack([cands, np.clip(best + noise, 0.0, 1.0)])
    else:
        cands = np.atleast_2d(np.asarray(candidates, dtype=float))
    means, variances = model.posterior(cands)
    lcb = means - config.exploration_coefficient * np.sqrt(variances)
    return cands[int(np.argmin(lcb))].copy()

"""GP surrogate: kernel identities, dense-solve oracle, caching, acquisition."""
import numpy as np
import pytest

from leapopt.core import make_rng
from leapopt.gp import (
    KEEP_BEST,
    MAX_POINTS,
    AcquisitionConfig,
    GPHyperparams,
    GPModel,
    acquire,
    fit_hyperparams,
    kernel,
    posterior,
)
from leapopt.gp import _log_marginal_likelihood, _standardize_stats


def dense_posterior(x_train, y_train, x_query, hp):
    """Textbook GP posterior via an explicit matrix inverse (the oracle)."""
    n = len(x_train)
    k = np.array([[kernel(a, b, hp) for b in x_train] for a in x_train])
    k += hp.noise_variance * np.eye(n)
    k_inv = np.linalg.inv(k)
    y_mean, y_scale = _standardize_stats(np.asarray(y_train, dtype=float))
    y_std = (np.asarray(y_train) - y_mean) / y_scale
    means, variances = [], []
    for q in np.atleast_2d(x_query):
        k_star = np.array([kernel(a, q, hp) for a in x_train])
        mu = k_star @ k_inv @ y_std
        var = hp.signal_variance - k_star @ k_inv @ k_star
        means.append(y_mean + y_scale * mu)
        variances.append(max(y_scale**2 * var, 0.0))
    return np.array(means), np.array(variances)


def filled_model(rng, n=12, dim=3, hp=None):
    model = GPModel(dim, hp)
    x = rng.uniform(size=(n, dim))
    y = rng.standard_normal(n)
    for xi, yi in zip(x, y):
        model.add(xi, yi)
    return model, x, y


def test_kernel_symmetry_and_self_value():
    hp = GPHyperparams(2.0, np.array([0.5, 1.0]), 1e-4)
    a = np.array([0.1, 0.9])
    b = np.array([0.4, 0.2])
    assert kernel(a, b, hp) == pytest.approx(kernel(b, a, hp))
    assert kernel(a, a, hp) == pytest.approx(2.0)
    assert 0.0 < kernel(a, b, hp) < 2.0


def test_kernel_ard_scales_each_dimension():
    hp = GPHyperparams(1.0, np.array([0.1, 10.0]), 1e-4)
    a = np.zeros(2)
    along_short = kernel(a, np.array([0.2, 0.0]), hp)
    along_long = kernel(a, np.array([0.0, 0.2]), hp)
    assert along_short < along_long


def test_hyperparams_validation():
    with pytest.raises(ValueError):
        GPHyperparams(0.0, np.array([1.0]), 1e-4)
    with pytest.raises(ValueError):
        GPHyperparams(1.0, np.array([-1.0]), 1e-4)
    with pytest.raises(ValueError):
        GPHyperparams(1.0, np.array([1.0]), 0.0)


def test_log_vector_roundtrip():
    hp = GPHyperparams(2.5, np.array([0.3, 0.7]), 1e-3)
    back = GPHyperparams.from_log_vector(hp.to_log_vector())
    assert back.signal_variance == pytest.approx(hp.signal_variance)
    np.testing.assert_allclose(back.length_scales, hp.length_scales)
    assert back.noise_variance == pytest.approx(hp.noise_variance)


def test_posterior_matches_dense_inverse_oracle():
    rng = make_rng(3)
    model, x, y = filled_model(rng, n=10, dim=2)
    queries = rng.uniform(size=(6, 2))
    means, variances = model.posterior(queries)
    om, ov = dense_posterior(x, y, queries, model.hyperparams)
    np.testing.assert_allclose(means, om, atol=1e-8)
    np.testing.assert_allclose(variances, ov, atol=1e-8)


def test_single_point_posterior_helper():
    rng = make_rng(4)
    model, x, y = filled_model(rng, n=8, dim=3)
    q = np.full(3, 0.4)
    mu, var = posterior(model, q)
    om, ov = dense_posterior(x, y, q, model.hyperparams)
    assert mu == pytest.approx(float(om[0]), abs=1e-8)
    assert var == pytest.approx(float(ov[0]), abs=1e-8)


def test_empty_model_posterior_is_the_prior():
    model = GPModel(2)
    means, variances = model.posterior(np.array([[0.5, 0.5]]))
    assert means[0] == 0.0
    assert variances[0] == pytest.approx(model.hyperparams.signal_variance)


def test_near_noiseless_gp_interpolates_training_data():
    rng = make_rng(5)
    hp = GPHyperparams(1.0, np.full(2, 0.5), 1e-10)
    x = rng.uniform(size=(7, 2))
    y = np.sin(3.0 * x[:, 0]) + x[:, 1]
    model = GPModel(2, hp)
    for xi, yi in zip(x, y):
        model.add(xi, yi)
    means, _ = model.posterior(x)
    np.testing.assert_allclose(means, y, atol=1e-4)


def test_incremental_cholesky_matches_full_rebuild():
    rng = make_rng(6)
    model, x, y = filled_model(rng, n=30, dim=4)
    incremental = model._chol.copy()
    model._rebuild_cache()
    np.testing.assert_allclose(incremental, model._chol, atol=1e-10)


def test_standardization_absorbs_constant_shifts():
    rng = make_rng(7)
    x = rng.uniform(size=(9, 2))
    y = rng.standard_normal(9)
    q = rng.uniform(size=(5, 2))
    base = GPModel(2)
    shifted = GPModel(2)
    for xi, yi in zip(x, y):
        base.add(xi, yi)
        shifted.add(xi, yi + 1000.0)
    m0, v0 = base.posterior(q)
    m1, v1 = shifted.posterior(q)
    np.testing.assert_allclose(m1, m0 + 1000.0, atol=1e-6)
    np.testing.assert_allclose(v1, v0, atol=1e-6)


def test_lml_gradient_matches_finite_differences():
    rng = make_rng(8)
    x = rng.uniform(size=(10, 2))
    y = rng.standard_normal(10)
    y_std = (y - y.mean()) / y.std()
    theta = GPHyperparams(0.8, np.array([0.4, 0.9]), 1e-3).to_log_vector()
    _, analytic = _log_marginal_likelihood(x, y_std, theta)
    h = 1e-6
    fd = np.zeros(theta.size)
    for d in range(theta.size):
        hi, lo = theta.copy(), theta.copy()
        hi[d] += h
        lo[d] -= h
        fd[d] = (
            _log_marginal_likelihood(x, y_std, hi, with_grad=False)[0]
            - _log_marginal_likelihood(x, y_std, lo, with_grad=False)[0]
        ) / (2.0 * h)
    np.testing.assert_allclose(analytic, fd, rtol=1e-5, atol=1e-7)


def test_fit_never_scores_below_the_default_initialization():
    rng = make_rng(9)
    x = rng.uniform(size=(25, 2))
    y = np.sin(6.0 * x[:, 0]) + 0.1 * rng.standard_normal(25)
    y_mean, y_scale = _standardize_stats(y)
    y_std = (y - y_mean) / y_scale
    fitted = fit_hyperparams(x, y)
    default = GPHyperparams.default(2)
    lml_fit, _ = _log_marginal_likelihood(x, y_std, fitted.to_log_vector(),
                                          with_grad=False)
    lml_def, _ = _log_marginal_likelihood(x, y_std, default.to_log_vector(),
                                          with_grad=False)
    assert lml_fit >= lml_def - 1e-9


def test_fit_requires_two_points():
    with pytest.raises(ValueError):
        fit_hyperparams(np.zeros((1, 2)), np.zeros(1))


def test_maybe_refit_happens_on_cadence():
    rng = make_rng(10)
    model, _, _ = filled_model(rng, n=30, dim=2)
    assert not model._fitted
    model.maybe_refit(rng)
    assert model._fitted
    first = model.hyperparams
    model.add(rng.uniform(size=2), 0.0)
    model.maybe_refit(rng)  # below the refit interval: parameters unchanged
    assert model.hyperparams is first


def test_dataset_cap_keeps_the_best_losses():
    rng = make_rng(11)
    n = MAX_POINTS + 40
    model = GPModel(2)
    x = rng.uniform(size=(n, 2))
    y = np.arange(n, dtype=float)
    rng.shuffle(y)
    for xi, yi in zip(x, y):
        model.add(xi, yi)
    assert model.n_points == n
    model.maybe_refit(make_rng(0))
    assert model.n_points == MAX_POINTS
    kept = np.sort(model.losses)
    np.testing.assert_array_equal(kept[:KEEP_BEST], np.arange(KEEP_BEST))


def test_acquire_minimizes_lcb_on_explicit_grid():
    rng = make_rng(12)
    model, x, y = filled_model(rng, n=15, dim=2)
    grid_axes = np.linspace(0.0, 1.0, 21)
    grid = np.array([[a, b] for a in grid_axes for b in grid_axes])
    config = AcquisitionConfig(exploration_coefficient=2.0)
    choice = acquire(model, config, rng, candidates=grid)
    means, variances = model.posterior(grid)
    lcb = means - 2.0 * np.sqrt(variances)
    np.testing.assert_array_equal(choice, grid[np.argmin(lcb)])


def test_acquire_is_deterministic_for_a_fixed_rng():
    model, _, _ = filled_model(make_rng(13), n=10, dim=3)
    config = AcquisitionConfig()
    a = acquire(model, config, make_rng(99))
    b = acquire(model, config, make_rng(99))
    np.testing.assert_array_equal(a, b)
    assert a.shape == (3,)
    assert np.all((a >= 0.0) & (a <= 1.0))


def test_acquisition_config_validation():
    with pytest.raises(ValueError):
        AcquisitionConfig(exploration_coefficient=-0.1)
    with pytest.raises(ValueError):
        AcquisitionConfig(candidate_count=0)


def test_best_point_and_add_validation():
    model = GPModel(2)
    with pytest.raises(ValueError):
        model.best_point()
    with pytest.raises(ValueError):
        model.add(np.zeros(3), 1.0)
    model.add(np.array([0.2, 0.8]), 3.0)
    model.add(np.array([0.5, 0.5]), 1.0)
    np.testing.assert_array_equal(model.best_point(), [0.5, 0.5])


def test_duplicate_points_stay_numerically_stable():
    # Repeated identical rows drive the pivot check into the rebuild path.
    model = GPModel(2, GPHyperparams(1.0, np.full(2, 0.5), 1e-8))
    point = np.full(2, 0.3)
    for k in range(6):
        model.add(point, 1.0 + 0.01 * k)
    means, variances = model.posterior(point[None, :])
    assert np.isfinite(means[0]) and np.isfinite(variances[0])

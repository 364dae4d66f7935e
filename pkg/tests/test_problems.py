"""Benchmark problems: registry, shapes, determinism, gradients, branches."""
import numpy as np
import pytest

from leapopt.problems import (
    GradientFreeView,
    get_problem,
    problem_names,
)
from leapopt.problems.synthetic import SyntheticRugged
from helpers import central_difference, relative_error

# Frozen 1D oracle for the synthetic landscape's per-coordinate term,
# computed once by dense grid search (2,000,001 points) plus bounded polish.
SYNTH_MIN_X = 0.6781719329345616
SYNTH_MIN_VALUE = -0.1279969089215838

# Cheap episode lengths keep this module fast; physics is unchanged.
FAST_OPTIONS = {
    "synthetic": {},
    "cartpole": {"horizon": 30},
    "bounce": {"steps": 500},
    "pinball-2": {"steps": 150},
    "pinball-16": {"steps": 150},
    "swing-stiffness": {"steps": 150},
    "swing-velocity": {"steps": 150},
}


def fast_problem(name):
    return get_problem(name, **FAST_OPTIONS[name])


def test_registry_lists_all_benchmarks():
    assert problem_names() == [
        "bounce",
        "cartpole",
        "pinball-16",
        "pinball-2",
        "swing-stiffness",
        "swing-velocity",
        "synthetic",
    ]


def test_registry_rejects_unknown_names():
    with pytest.raises(KeyError, match="known problems"):
        get_problem("does-not-exist")


def test_problem_dimensions():
    dims = {
        "synthetic": 10,
        "cartpole": 30,
        "bounce": 2,
        "pinball-2": 2,
        "pinball-16": 16,
        "swing-stiffness": 16,
        "swing-velocity": 3,
    }
    for name, dim in dims.items():
        problem = fast_problem(name)
        assert problem.dimension == dim
        assert problem.bounds.dim == dim
        assert np.all(problem.bounds.lower < problem.bounds.upper)


@pytest.mark.parametrize("name", sorted(FAST_OPTIONS))
def test_evaluate_returns_finite_loss_and_matching_gradient(name):
    problem = fast_problem(name)
    x = problem.bounds.lower + 0.43 * problem.bounds.span
    loss, grad = problem.evaluate(x)
    assert np.isfinite(loss)
    assert grad.shape == (problem.dimension,)
    assert np.all(np.isfinite(grad))


@pytest.mark.parametrize("name", sorted(FAST_OPTIONS))
def test_evaluate_is_deterministic(name):
    problem = fast_problem(name)
    x = problem.bounds.lower + 0.57 * problem.bounds.span
    first = problem.evaluate(x)
    second = problem.evaluate(x)
    assert first[0] == second[0]
    np.testing.assert_array_equal(first[1], second[1])


@pytest.mark.parametrize("name", sorted(FAST_OPTIONS))
def test_gradient_spot_check_against_finite_differences(name):
    problem = fast_problem(name)
    x = problem.bounds.lower + 0.37 * problem.bounds.span
    loss, grad = problem.evaluate(x)
    h = 1e-6 * problem.bounds.span.min()
    fd = central_difference(problem, x, h=h)
    # Contact-bearing scenes get a looser bar; the acceptance suite sweeps
    # many points with branch-boundary rejection.
    tol = 1e-3 if name.startswith(("pinball", "swing", "bounce")) else 1e-4
    err = relative_error(fd, grad)
    assert err.max() < tol, f"{name}: max rel err {err.max():.2e}"


def test_synthetic_closed_form_matches_definition():
    problem = SyntheticRugged(dim=3)
    x = np.array([0.2, 0.55, 0.9])
    loss, grad = problem.evaluate(x)
    env = np.exp(-2.0 * (x - 0.4) ** 2)
    expected = np.sum((x - 0.7) ** 2 + 0.15 * np.sin(14.0 * np.pi * x) * env)
    assert loss == pytest.approx(expected, rel=1e-12)
    fd = central_difference(problem, x, h=1e-7)
    np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-7)


def test_synthetic_global_minimum_matches_grid_oracle():
    problem = SyntheticRugged(dim=10)
    x_star = np.full(10, SYNTH_MIN_X)
    loss, grad = problem.evaluate(x_star)
    assert loss == pytest.approx(10.0 * SYNTH_MIN_VALUE, abs=1e-9)
    np.testing.assert_allclose(grad, 0.0, atol=1e-6)
    # Nothing on a coarse probe grid beats the frozen optimum.
    probe = np.linspace(0.0, 1.0, 101)
    best_probe = min(problem.evaluate(np.full(10, v))[0] for v in probe)
    assert loss <= best_probe + 1e-12


def test_gradient_free_view_strips_gradients():
    problem = GradientFreeView(SyntheticRugged(dim=4))
    assert not problem.gradient_available
    x = np.full(4, 0.3)
    loss, grad = problem.evaluate(x)
    assert grad is None
    assert loss == pytest.approx(SyntheticRugged(dim=4).evaluate(x)[0])


def test_branch_signature_stability_and_sensitivity():
    problem = get_problem("bounce", steps=500)
    throw = np.array([3.0, -6.0])
    assert problem.branch_signature(throw) == problem.branch_signature(throw)
    # A gentle lob and a hard downward throw touch ground on different steps.
    other = np.array([3.0, -1.0])
    assert problem.branch_signature(throw) != problem.branch_signature(other)


def test_bounce_count_changes_across_throw_speeds():
    problem = get_problem("bounce")
    counts = {vy: problem.bounce_count(np.array([2.0, vy]))
              for vy in (0.0, -6.0, -9.0)}
    assert all(c >= 1 for c in counts.values())
    assert len(set(counts.values())) > 1
    # A short horizon ends the episode before the ball reaches the ground.
    airborne = get_problem("bounce", steps=300)
    assert airborne.bounce_count(np.array([2.0, 0.0])) == 0


def test_pinball_miss_all_angles_has_no_collider_contacts():
    problem = get_problem("pinball-16")
    angles = problem.miss_all_angles()
    assert problem.collider_contact_count(angles) == 0
    loss, grad = problem.evaluate(angles)
    np.testing.assert_array_equal(grad, np.zeros(16))


def test_pinball_touched_collider_gets_nonzero_gradient():
    problem = get_problem("pinball-2")
    x = np.array([0.3, -0.2])
    if problem.collider_contact_count(x) == 0:
        pytest.skip("probe configuration misses both colliders")
    _, grad = problem.evaluate(x)
    assert np.any(grad != 0.0)


def test_swing_modes_share_the_physics_but_not_the_parameterization():
    stiff = get_problem("swing-stiffness", steps=150)
    velo = get_problem("swing-velocity", steps=150)
    assert stiff.dimension == 16 and velo.dimension == 3
    # Reference parameters reproduce the target rollout: near-zero loss.
    loss_at_ref, _ = stiff.evaluate(np.full(16, 110.0))
    assert loss_at_ref < 1e-10
    loss_at_ref_v, _ = velo.evaluate(np.array([0.0, 1.2, 0.8]))
    assert loss_at_ref_v < 1e-10


def test_swing_rejects_bad_mode_and_loss():
    from leapopt.problems.swing import SwingProblem

    with pytest.raises(ValueError):
        SwingProblem("sideways")
    with pytest.raises(ValueError):
        SwingProblem("velocity", loss="nope")
    with pytest.raises(ValueError):
        SwingProblem("velocity", steps=0)


def test_check_point_rejects_wrong_dimension():
    problem = SyntheticRugged(dim=3)
    with pytest.raises(Exception):
        problem.evaluate(np.zeros(4))

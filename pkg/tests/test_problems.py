"""Cost-family structure: features, gradients, Hessians, admissibility."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fd_gradient_oracle, philox, random_admissible_congestion
from gradtrack.problems import (
    CONGESTION_DIRS,
    MU_FLOOR_DEFAULT,
    PROBLEMS,
    StrongConvexityCertificate,
    evaluate_cost,
    evaluate_gradient,
    evaluate_hessian,
    make_problem,
    quadratic_parts,
    quadratic_theta_from_parts,
    sigmoid,
    softplus,
)

ALL_PROBLEM_IDS = ["quadratic-tracking", "congestion-pricing", "synthetic-3d"]


def random_theta(rng, model):
    if model.name == "quadratic-tracking":
        # positive definite H keeps the instance in-family
        L = rng.standard_normal((2, 2))
        H = L @ L.T + 0.1 * np.eye(2)
        return quadratic_theta_from_parts(H, rng.standard_normal(2))
    theta = rng.uniform(0.0, 2.0, size=model.p)
    theta[0] = rng.uniform(0.5, 2.0)
    return theta


# -- closed-form values ---------------------------------------------------------


def test_quadratic_cost_unit_hessian(quadratic_model):
    value = evaluate_cost(quadratic_model, np.array([1.0, 1.0]), np.array([0.0, 0.0, 1.0, 0.0, 1.0]))
    assert value == pytest.approx(2.0, abs=1e-14)


def test_congestion_cost_pure_quadratic(congestion_model):
    theta = np.zeros(7)
    theta[0] = 1.0
    assert evaluate_cost(congestion_model, np.array([3.0, 4.0]), theta) == pytest.approx(12.5, abs=1e-12)


def test_congestion_cost_softplus_at_threshold(congestion_model):
    # first link direction (1, 0) crosses its threshold at x = (0.5, 0)
    theta = np.zeros(7)
    theta[1] = 1.0
    value = evaluate_cost(congestion_model, np.array([0.5, 0.0]), theta)
    assert value == pytest.approx(np.log(2.0), abs=1e-12)


def test_quadratic_gradient_example(quadratic_model):
    grad = evaluate_gradient(quadratic_model, np.array([1.0, 2.0]), np.array([0.0, 0.0, 1.0, 0.0, 1.0]))
    np.testing.assert_allclose(grad, [2.0, 4.0], atol=1e-14)


@pytest.mark.parametrize("problem_id", ALL_PROBLEM_IDS)
def test_zero_theta_zero_gradient(problem_id):
    model = make_problem(problem_id, 0.0)
    rng = philox(1)
    x = rng.uniform(0.5, 1.5, size=model.n)
    np.testing.assert_array_equal(evaluate_gradient(model, x, np.zeros(model.p)), np.zeros(model.n))


def test_quadratic_c_rows_closed_form(quadratic_model):
    x = np.array([0.7, -1.3])
    C = quadratic_model.C(x)
    np.testing.assert_allclose(C[0], [-2.0, 0.0, 2 * x[0], 2 * x[1], 0.0], atol=0)
    np.testing.assert_allclose(C[1], [0.0, -2.0, 0.0, 2 * x[0], 2 * x[1]], atol=0)


def test_congestion_c_columns_closed_form(congestion_model):
    x = np.array([0.8, -0.4])
    C = congestion_model.C(x)
    np.testing.assert_allclose(C[:, 0], x, atol=0)
    for i, a in enumerate(CONGESTION_DIRS):
        s = 1.0 / (1.0 + np.exp(-(a @ x - 0.5)))
        np.testing.assert_allclose(C[:, i + 1], s * a, rtol=1e-15)


# -- derivative consistency (finite-difference oracles) -------------------------


@pytest.mark.parametrize("problem_id", ALL_PROBLEM_IDS)
def test_gradient_matches_finite_differences(problem_id):
    model = make_problem(problem_id, 0.0)
    rng = philox(2, stream=ALL_PROBLEM_IDS.index(problem_id))
    for _ in range(100):
        x = rng.uniform(-2.0, 2.0, size=model.n)
        theta = random_theta(rng, model)
        grad = evaluate_gradient(model, x, theta)
        fd = fd_gradient_oracle(model, x, theta)
        assert np.abs(grad - fd).max() <= 1e-5


@pytest.mark.parametrize("problem_id", ALL_PROBLEM_IDS)
def test_hessian_matches_finite_differences(problem_id):
    model = make_problem(problem_id, 0.0)
    rng = philox(3)
    for _ in range(25):
        x = rng.uniform(-1.5, 1.5, size=model.n)
        theta = random_theta(rng, model)
        H = evaluate_hessian(model, x, theta)
        fd = np.zeros((model.n, model.n))
        for i in range(model.n):
            h = 1e-5 * (1.0 + abs(x[i]))
            e = np.zeros(model.n)
            e[i] = h
            fd[:, i] = (
                evaluate_gradient(model, x + e, theta) - evaluate_gradient(model, x - e, theta)
            ) / (2.0 * h)
        assert np.abs(H - 0.5 * (fd + fd.T)).max() <= 1e-4


def test_hessian_closed_forms(quadratic_model, congestion_model):
    H = evaluate_hessian(quadratic_model, np.array([3.0, -1.0]), np.array([9.0, 9.0, 1.0, 0.0, 1.0]))
    np.testing.assert_array_equal(H, 2.0 * np.eye(2))
    theta = np.zeros(7)
    theta[0] = 1.0
    Hc = evaluate_hessian(congestion_model, np.array([0.3, 0.9]), theta)
    np.testing.assert_array_equal(Hc, np.eye(2))


@pytest.mark.parametrize("problem_id", ALL_PROBLEM_IDS)
def test_hessian_exactly_symmetric(problem_id):
    model = make_problem(problem_id, 0.0)
    rng = philox(4)
    for _ in range(20):
        H = evaluate_hessian(model, rng.uniform(-2, 2, model.n), random_theta(rng, model))
        np.testing.assert_array_equal(H, H.T)


# -- convexity, admissibility, projection ---------------------------------------


def test_congestion_strong_convexity_certificate(congestion_model):
    rng = philox(5)
    thetas = np.array([random_admissible_congestion(rng, congestion_model) for _ in range(10)])
    cert = StrongConvexityCertificate(mu=0.5, box_lo=-5 * np.ones(2), box_hi=5 * np.ones(2))
    assert cert.holds(congestion_model, thetas)


def test_congestion_hessian_floor_at_admissible_theta(congestion_model):
    rng = philox(6)
    for _ in range(50):
        theta = np.concatenate(([MU_FLOOR_DEFAULT], rng.uniform(0, 3, 6)))
        x = rng.uniform(-4, 4, 2)
        H = evaluate_hessian(congestion_model, x, theta)
        assert np.linalg.eigvalsh(H).min() >= MU_FLOOR_DEFAULT - 1e-12


def test_quadratic_projection_raises_eigenvalues(quadratic_model):
    theta = np.array([1.0, -2.0, 1.0, 0.0, -1.0])  # H = diag(1, -1): indefinite
    assert not quadratic_model.admissible(theta)
    proj = quadratic_model.project_theta(theta)
    assert quadratic_model.admissible(proj)
    H, btilde = quadratic_parts(proj)
    np.testing.assert_allclose(btilde, theta[:2], atol=0)
    assert np.linalg.eigvalsh(H).min() >= MU_FLOOR_DEFAULT - 1e-12


def test_quadratic_projection_identity_when_admissible(quadratic_model):
    theta = np.array([0.5, 0.5, 2.0, 0.3, 1.0])
    assert quadratic_model.admissible(theta)
    np.testing.assert_array_equal(quadratic_model.project_theta(theta), theta)


def test_congestion_projection_floors_components(congestion_model):
    theta = np.array([-0.5, -1.0, 0.2, -0.1, 0.0, 3.0, -4.0])
    proj = congestion_model.project_theta(theta)
    assert congestion_model.admissible(proj)
    assert proj[0] == MU_FLOOR_DEFAULT
    np.testing.assert_array_equal(proj[1:], np.maximum(theta[1:], 0.0))


def test_quadratic_parts_round_trip():
    theta = np.array([1.0, -2.0, 3.0, 0.5, 4.0])
    H, btilde = quadratic_parts(theta)
    np.testing.assert_array_equal(quadratic_theta_from_parts(H, btilde), theta)
    np.testing.assert_array_equal(H, H.T)


# -- registry and plumbing -------------------------------------------------------


def test_registry_ids_and_alias():
    assert set(ALL_PROBLEM_IDS) <= set(PROBLEMS)
    alias = make_problem("congestion", 0.5)
    full = make_problem("congestion-pricing", 0.5)
    assert alias.name == full.name
    assert (alias.n, alias.p) == (full.n, full.p)


def test_unknown_problem_raises():
    with pytest.raises(KeyError, match="registered"):
        make_problem("not-a-problem", 0.0)


def test_dimension_mismatch_raises(quadratic_model):
    with pytest.raises(ValueError):
        evaluate_cost(quadratic_model, np.zeros(3), np.zeros(5))
    with pytest.raises(ValueError):
        evaluate_gradient(quadratic_model, np.zeros(2), np.zeros(4))


def test_weighting_identity_when_noise_disabled():
    model = make_problem("quadratic-tracking", 0.0)
    np.testing.assert_array_equal(model.R, np.eye(2))
    assert model.noise_std == 0.0
    noisy = make_problem("quadratic-tracking", 0.6)
    np.testing.assert_allclose(noisy.R, 0.36 * np.eye(2), rtol=1e-15)
    assert noisy.noise_std == 0.6


def test_softplus_overflow_branches():
    assert softplus(np.array([40.0]))[0] == 40.0
    assert softplus(np.array([-40.0]))[0] == np.exp(-40.0)
    mid = softplus(np.array([0.0]))[0]
    assert mid == pytest.approx(np.log(2.0), abs=1e-15)
    assert np.isfinite(sigmoid(np.array([-1e4, 1e4]))).all()


@settings(max_examples=50, deadline=None)
@given(st.floats(-200, 200))
def test_softplus_positive_and_monotone(z):
    val = softplus(np.array([z]))[0]
    assert val >= 0.0
    assert softplus(np.array([z + 0.5]))[0] >= val


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gradient_linear_in_theta(seed):
    model = make_problem("congestion-pricing", 0.0)
    rng = philox(seed)
    x = rng.uniform(-2, 2, size=2)
    ta, tb = rng.standard_normal(7), rng.standard_normal(7)
    lhs = evaluate_gradient(model, x, 2.0 * ta + tb)
    rhs = 2.0 * evaluate_gradient(model, x, ta) + evaluate_gradient(model, x, tb)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)

"""Shared fixtures and oracle helpers for the test suite.

The helpers here are deliberately independent of the library internals they
check: finite differences are re-implemented inline, the grid-search
minimizer evaluates the cost directly on a lattice, and stacked windows can
be constructed field-by-field without going through data collection.
"""

from __future__ import annotations

import numpy as np
import pytest

from gradtrack.dynamics import TrajectoryBundle, simulate_latent, stationary_covariance
from gradtrack.estimation import StackedWindow, WindowedEstimate
from gradtrack.problems import GradientOracleModel, evaluate_cost, make_problem


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=((stream << 64) | seed)))


@pytest.fixture
def rng() -> np.random.Generator:
    return philox(20260814)


@pytest.fixture
def quadratic_model() -> GradientOracleModel:
    return make_problem("quadratic-tracking", 0.0)


@pytest.fixture
def congestion_model() -> GradientOracleModel:
    return make_problem("congestion-pricing", 0.0)


@pytest.fixture
def synthetic3_model() -> GradientOracleModel:
    return make_problem("synthetic-3d", 0.0)


def frozen_bundle(
    model: GradientOracleModel,
    theta: np.ndarray,
    xs: np.ndarray,
    horizon: int | None = None,
) -> TrajectoryBundle:
    """Noise-free bundle with a constant parameter vector."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    theta = np.asarray(theta, dtype=float)
    n_collect = xs.shape[0]
    T = n_collect - 1 if horizon is None else horizon
    theta_path = np.tile(theta, (T + 1, 1))
    ys = np.array([model.C(x) @ theta for x in xs])
    return TrajectoryBundle(theta=theta_path, x=xs, y=ys, offset=None, clamp_count=0)


def random_stacked_window(
    rng: np.random.Generator,
    k: int = 3,
    n: int = 2,
    p: int = 5,
    sigma: float = 0.6,
) -> StackedWindow:
    """Full-column-rank window with i.i.d. Gaussian stacked rows."""
    C_bar = rng.standard_normal((k * n, p))
    y_bar = rng.standard_normal(k * n)
    R_chol = sigma * np.eye(n)
    return StackedWindow(t=0, y_bar=y_bar, C_bar=C_bar, R_chol=R_chol, k=k, n=n, p=p)


def redraw_y(
    window: StackedWindow, theta: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Fresh y_bar = C_bar theta + stacked noise with per-block covariance R."""
    noise = (rng.standard_normal((window.k, window.n)) @ window.R_chol.T).ravel()
    return window.C_bar @ np.asarray(theta, dtype=float) + noise


def as_estimates(thetas: np.ndarray, t0: int = 0) -> list[WindowedEstimate]:
    """Wrap a (T, p) array as unit-covariance windowed estimates."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    p = thetas.shape[1]
    return [
        WindowedEstimate(t=t0 + i, theta_tilde=row, sigma_eta=np.eye(p), alpha_k=1.0)
        for i, row in enumerate(thetas)
    ]


def noisy_path_estimates(dyn, steps, noise_std, rng) -> list[WindowedEstimate]:
    """Stationary path observed through i.i.d. estimate noise."""
    sigma = stationary_covariance(dyn)
    theta0 = np.linalg.cholesky(sigma) @ rng.standard_normal(dyn.p)
    path = simulate_latent(dyn, theta0, steps, rng)
    observed = path + noise_std * rng.standard_normal(path.shape)
    return as_estimates(observed)


def _congestion_lattice_argmin(
    theta: np.ndarray, center: np.ndarray, half: float, step: float
) -> tuple[np.ndarray, bool]:
    """Argmin of the congestion cost on a square lattice; flags boundary hits.

    Evaluates theta_0 |x|^2 / 2 + sum_i theta_i softplus(a_i^T x - d) directly
    on the grid, independent of the library's gradient or Hessian code.
    """
    from gradtrack.problems import CONGESTION_DIRS, CONGESTION_OFFSET, softplus

    ax0 = np.arange(center[0] - half, center[0] + half + step / 2, step)
    ax1 = np.arange(center[1] - half, center[1] + half + step / 2, step)
    best_val = np.inf
    best_i0 = best_i1 = 0
    rows_per_chunk = max(1, 500_000 // len(ax1))
    for lo in range(0, len(ax0), rows_per_chunk):
        block = ax0[lo : lo + rows_per_chunk]
        X = np.stack(np.meshgrid(block, ax1, indexing="ij"), axis=-1).reshape(-1, 2)
        vals = 0.5 * theta[0] * np.einsum("ij,ij->i", X, X)
        vals += softplus(X @ CONGESTION_DIRS.T - CONGESTION_OFFSET) @ theta[1:]
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_i0, best_i1 = lo + i // len(ax1), i % len(ax1)
    on_edge = best_i0 in (0, len(ax0) - 1) or best_i1 in (0, len(ax1) - 1)
    return np.array([ax0[best_i0], ax1[best_i1]]), on_edge


def grid_minimize_congestion(theta: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Lattice search at step 1e-3, refined to 1e-6 around the lattice optimum.

    The coarse window sits around ``center``; a boundary hit escalates to a
    wide search so the result never silently excludes the unique minimizer
    of the strongly convex cost.
    """
    theta = np.asarray(theta, dtype=float)
    point, on_edge = _congestion_lattice_argmin(
        theta, np.asarray(center, dtype=float), 0.25, 1e-3
    )
    if on_edge:
        point, on_edge = _congestion_lattice_argmin(theta, np.zeros(2), 8.0, 1e-2)
        assert not on_edge, "grid oracle window too small for this instance"
        point, _ = _congestion_lattice_argmin(theta, point, 2e-2, 1e-3)
    point, _ = _congestion_lattice_argmin(theta, point, 2e-3, 1e-4)
    point, _ = _congestion_lattice_argmin(theta, point, 2e-4, 1e-6)
    return point


def fd_gradient_oracle(
    model: GradientOracleModel, x: np.ndarray, theta: np.ndarray
) -> np.ndarray:
    """Central-difference gradient of the cost, step 1e-6 scaled by 1+|x_i|."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(len(x)):
        h = 1e-6 * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        up = evaluate_cost(model, x + e, theta)
        dn = evaluate_cost(model, x - e, theta)
        out[i] = (up - dn) / (2.0 * h)
    return out


def random_admissible_congestion(
    rng: np.random.Generator, model: GradientOracleModel
) -> np.ndarray:
    """theta_0 in [0.5, 2], prices in [0, 2]: strongly convex with margin."""
    theta = np.empty(model.p)
    theta[0] = rng.uniform(0.5, 2.0)
    theta[1:] = rng.uniform(0.0, 2.0, size=model.p - 1)
    return theta

"""Parametric objectives with gradients linear in the parameter vector.

Each problem is a cost f(x, theta) = g(x)^T theta whose gradient in x is
C(x) theta, where C(x) = (dg/dx)^T has shape (n, p).  The measurement model
observes C(x) theta plus Gaussian noise, so everything downstream (windowed
reconstruction, identification, forecasting) only needs g, C, the Hessian in
x, and an admissibility predicate on theta that keeps the cost strongly
convex.

Registered problems:

``quadratic-tracking``
    n = 2, p = 5.  f = x^T H x - 2 btilde^T x with theta = (btilde_1,
    btilde_2, h11, h12, h22).  Admissible when H(theta) has eigenvalues
    at or above a floor.

``congestion-pricing``
    n = 2, p = 7.  f = theta_0 |x|^2 / 2 + sum_i theta_i softplus(a_i^T x
    - 0.5) over six fixed link directions.  Admissible when theta_0 is at
    or above a floor and the remaining prices are nonnegative.

``synthetic-3d``
    n = p = 3 variant of the congestion form with two links; C(x) is square
    and invertible whenever x_3 > 0, which makes single-measurement windows
    exactly determined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

MU_FLOOR_DEFAULT = 1e-3

# Softplus switches to its asymptotes outside +-30 to avoid overflow.
_SOFTPLUS_CUT = 30.0


def softplus(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.where(z > _SOFTPLUS_CUT, z, 0.0)
    mid = (z <= _SOFTPLUS_CUT) & (z >= -_SOFTPLUS_CUT)
    out = np.where(mid, np.log1p(np.exp(np.clip(z, -_SOFTPLUS_CUT, _SOFTPLUS_CUT))), out)
    return np.where(z < -_SOFTPLUS_CUT, np.exp(np.clip(z, None, 0.0)), out)


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    pos = z >= 0
    out = np.empty_like(z, dtype=float)
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class GradientOracleModel:
    """A cost family f(x, theta) = g(x)^T theta and its derivative maps.

    Attributes
    ----------
    name : str
        Registry id.
    n, p : int
        Decision and parameter dimensions.
    g : callable
        Feature map, (n,) -> (p,).
    C : callable
        Gradient map, (n,) -> (n, p), with grad_x f = C(x) theta.
    hess : callable
        Hessian in x, (x, theta) -> (n, n), symmetric.
    R : ndarray
        Measurement-noise covariance used for estimator weighting, SPD
        (n, n).  When ``noise_std`` is zero this stays the identity so the
        weighted least-squares problem remains well posed.
    noise_std : float
        Standard deviation actually added to measurements (0 disables noise).
    admissible : callable
        theta -> bool, true when the cost is strongly convex with margin.
    project_theta : callable
        theta -> nearest admissible theta (used to clamp simulated truths and
        to regularize forecasts before minimizer recovery).
    """

    name: str
    n: int
    p: int
    g: Callable[[np.ndarray], np.ndarray]
    C: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray, np.ndarray], np.ndarray]
    R: np.ndarray
    noise_std: float
    admissible: Callable[[np.ndarray], bool]
    project_theta: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self) -> None:
        R = np.asarray(self.R, dtype=float)
        if R.shape != (self.n, self.n):
            raise ValueError(f"R must be {self.n}x{self.n}, got {R.shape}")
        if not np.allclose(R, R.T, atol=1e-12):
            raise ValueError("R must be symmetric")
        if np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be positive definite")


def _check_x(model: GradientOracleModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise ValueError(f"x must have shape ({model.n},), got {x.shape}")
    return x


def _check_theta(model: GradientOracleModel, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.p,):
        raise ValueError(f"theta must have shape ({model.p},), got {theta.shape}")
    return theta


def evaluate_cost(model: GradientOracleModel, x: np.ndarray, theta: np.ndarray) -> float:
    """f(x, theta) = g(x)^T theta."""
    x = _check_x(model, x)
    theta = _check_theta(model, theta)
    return float(model.g(x) @ theta)


def evaluate_gradient(model: GradientOracleModel, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """grad_x f = C(x) theta, shape (n,)."""
    x = _check_x(model, x)
    theta = _check_theta(model, theta)
    return model.C(x) @ theta


def evaluate_hessian(model: GradientOracleModel, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """hess_x f, shape (n, n), symmetric."""
    x = _check_x(model, x)
    theta = _check_theta(model, theta)
    return model.hess(x, theta)


# -- quadratic tracking -------------------------------------------------------


def quadratic_parts(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split theta = (btilde_1, btilde_2, h11, h12, h22) into (H, btilde)."""
    theta = np.asarray(theta, dtype=float)
    H = np.array([[theta[2], theta[3]], [theta[3], theta[4]]])
    return H, theta[:2].copy()


def quadratic_theta_from_parts(H: np.ndarray, btilde: np.ndarray) -> np.ndarray:
    return np.array([btilde[0], btilde[1], H[0, 0], H[0, 1], H[1, 1]])


def _quadratic_g(x: np.ndarray) -> np.ndarray:
    return np.array([-2.0 * x[0], -2.0 * x[1], x[0] ** 2, 2.0 * x[0] * x[1], x[1] ** 2])


def _quadratic_C(x: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [-2.0, 0.0, 2.0 * x[0], 2.0 * x[1], 0.0],
            [0.0, -2.0, 0.0, 2.0 * x[0], 2.0 * x[1]],
        ]
    )


def _quadratic_hess(x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    H, _ = quadratic_parts(theta)
    return 2.0 * H


def _quadratic_admissible(theta: np.ndarray, mu: float = MU_FLOOR_DEFAULT) -> bool:
    H, _ = quadratic_parts(theta)
    return bool(np.linalg.eigvalsh(H).min() >= mu)


def _quadratic_project(theta: np.ndarray, mu: float = MU_FLOOR_DEFAULT) -> np.ndarray:
    """Raise the eigenvalues of H(theta) to the floor, keep btilde."""
    H, btilde = quadratic_parts(theta)
    vals, vecs = np.linalg.eigh(H)
    if vals.min() >= mu:
        return np.asarray(theta, dtype=float).copy()
    H_proj = (vecs * np.maximum(vals, mu)) @ vecs.T
    return quadratic_theta_from_parts(H_proj, btilde)


# -- congestion-style problems ------------------------------------------------

CONGESTION_DIRS = np.array(
    [
        [1.0, 0.0],
        [-1.0, 0.0],
        [0.0, 1.0],
        [0.0, -1.0],
        [1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)],
        [1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0)],
    ]
)
CONGESTION_OFFSET = 0.5

SYNTHETIC3_DIRS = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
    ]
)


def _link_g(dirs: np.ndarray, offset: float) -> Callable[[np.ndarray], np.ndarray]:
    def g(x: np.ndarray) -> np.ndarray:
        return np.concatenate(([0.5 * float(x @ x)], softplus(dirs @ x - offset)))

    return g


def _link_C(dirs: np.ndarray, offset: float) -> Callable[[np.ndarray], np.ndarray]:
    def C(x: np.ndarray) -> np.ndarray:
        s = sigmoid(dirs @ x - offset)
        return np.column_stack([x, (dirs * s[:, None]).T])

    return C


def _link_hess(dirs: np.ndarray, offset: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    def hess(x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        z = dirs @ x - offset
        s = sigmoid(z)
        w = theta[1:] * s * (1.0 - s)
        M = theta[0] * np.eye(len(x)) + (dirs.T * w) @ dirs
        # symmetrized so callers can rely on bit-exact symmetry
        return 0.5 * (M + M.T)

    return hess


def _link_admissible(theta: np.ndarray, mu: float = MU_FLOOR_DEFAULT) -> bool:
    return bool(theta[0] >= mu and np.all(theta[1:] >= 0.0))


def _link_project(theta: np.ndarray, mu: float = MU_FLOOR_DEFAULT) -> np.ndarray:
    out = np.asarray(theta, dtype=float).copy()
    out[0] = max(out[0], mu)
    out[1:] = np.maximum(out[1:], 0.0)
    return out


# -- registry ------------------------------------------------------------------


def _weighting_R(n: int, sigma_m: float) -> np.ndarray:
    # Unit weighting when noise is disabled keeps R SPD; any SPD weighting
    # reproduces theta exactly from noise-free stacked measurements.
    s = sigma_m if sigma_m > 0 else 1.0
    return (s * s) * np.eye(n)


def make_quadratic_tracking(sigma_m: float) -> GradientOracleModel:
    return GradientOracleModel(
        name="quadratic-tracking",
        n=2,
        p=5,
        g=_quadratic_g,
        C=_quadratic_C,
        hess=_quadratic_hess,
        R=_weighting_R(2, sigma_m),
        noise_std=float(sigma_m),
        admissible=_quadratic_admissible,
        project_theta=_quadratic_project,
    )


def make_congestion(sigma_m: float) -> GradientOracleModel:
    return GradientOracleModel(
        name="congestion-pricing",
        n=2,
        p=7,
        g=_link_g(CONGESTION_DIRS, CONGESTION_OFFSET),
        C=_link_C(CONGESTION_DIRS, CONGESTION_OFFSET),
        hess=_link_hess(CONGESTION_DIRS, CONGESTION_OFFSET),
        R=_weighting_R(2, sigma_m),
        noise_std=float(sigma_m),
        admissible=_link_admissible,
        project_theta=_link_project,
    )


def make_synthetic3(sigma_m: float) -> GradientOracleModel:
    return GradientOracleModel(
        name="synthetic-3d",
        n=3,
        p=3,
        g=_link_g(SYNTHETIC3_DIRS, CONGESTION_OFFSET),
        C=_link_C(SYNTHETIC3_DIRS, CONGESTION_OFFSET),
        hess=_link_hess(SYNTHETIC3_DIRS, CONGESTION_OFFSET),
        R=_weighting_R(3, sigma_m),
        noise_std=float(sigma_m),
        admissible=_link_admissible,
        project_theta=_link_project,
    )


PROBLEMS: dict[str, Callable[[float], GradientOracleModel]] = {
    "quadratic-tracking": make_quadratic_tracking,
    "congestion-pricing": make_congestion,
    "congestion": make_congestion,
    "synthetic-3d": make_synthetic3,
}


def make_problem(name: str, sigma_m: float) -> GradientOracleModel:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        known = ", ".join(sorted(PROBLEMS))
        raise KeyError(f"unknown problem {name!r}; registered: {known}") from None
    return factory(sigma_m)


# -- verification helpers ------------------------------------------------------


def fd_gradient(model: GradientOracleModel, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Central-difference gradient of the cost, for checking C(x) theta."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(len(x)):
        h = 1e-6 * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (evaluate_cost(model, x + e, theta) - evaluate_cost(model, x - e, theta)) / (2 * h)
    return out


def fd_hessian(model: GradientOracleModel, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of the gradient, for checking hess."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    out = np.zeros((n, n))
    for i in range(n):
        h = 1e-5 * (1.0 + abs(x[i]))
        e = np.zeros(n)
        e[i] = h
        gp = evaluate_gradient(model, x + e, theta)
        gm = evaluate_gradient(model, x - e, theta)
        out[:, i] = (gp - gm) / (2 * h)
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class StrongConvexityCertificate:
    """Claim: lambda_min(hess f(x, theta)) >= mu on a box, for admissible theta."""

    mu: float
    box_lo: np.ndarray
    box_hi: np.ndarray

    def min_eig_on_grid(
        self,
        model: GradientOracleModel,
        thetas: np.ndarray,
        grid_per_axis: int = 7,
    ) -> float:
        axes = [
            np.linspace(self.box_lo[i], self.box_hi[i], grid_per_axis)
            for i in range(model.n)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
        worst = np.inf
        for theta in np.atleast_2d(thetas):
            for x in points:
                worst = min(worst, float(np.linalg.eigvalsh(model.hess(x, theta)).min()))
        return worst

    def holds(self, model: GradientOracleModel, thetas: np.ndarray, grid_per_axis: int = 7) -> bool:
        return self.min_eig_on_grid(model, thetas, grid_per_axis) >= self.mu - 1e-8

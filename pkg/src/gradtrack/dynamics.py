"""Latent-parameter dynamics, ground-truth simulation and data collection.

The parameter vector evolves as theta(t+1) = A theta(t) + w_p(t) with
w_p ~ N(0, Q) and Schur-stable A.  Experiments simulate an admissible
variant theta(t) = theta_bar + d(t) where the deviation d follows the same
linear recursion and starts from the stationary distribution; components
that leave the admissible set are clamped for observation while the linear
deviation keeps evolving, so the deviation from the linear model stays
measurable.

Collection drives query points x(t) with one of three policies and records
the noisy gradients y(t) = C(x(t)) theta(t) + w_m(t) for t = 0..N-1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ExplorationDivergedError,
    SimulationMisconfiguredError,
    UnstableDynamicsError,
)
from .problems import GradientOracleModel
from .rng import SeededRng
from .tables import render_csv, vector_columns

CLAMP_RATE_LIMIT = 0.20


@dataclass(frozen=True)
class LatentDynamics:
    """Pair (A, Q) driving theta(t+1) = A theta(t) + w_p(t).

    ``validate()`` enforces the assumptions the estimation theory needs
    (Schur stability, invertibility, PSD Q).  Construction itself stays
    permissive so tests can use frozen-parameter modes such as A = I with
    Q = 0.
    """

    A: np.ndarray
    Q: np.ndarray

    def __post_init__(self) -> None:
        A = np.asarray(self.A, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if Q.shape != A.shape:
            raise ValueError("Q must match A in shape")
        if not np.allclose(Q, Q.T, atol=1e-10 * (1.0 + np.abs(Q).max())):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(0.5 * (Q + Q.T)).min() < -1e-12:
            raise ValueError("Q must be positive semidefinite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))

    @property
    def p(self) -> int:
        return self.A.shape[0]

    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.A)).max())

    def validate(self) -> None:
        """Check Schur stability and invertibility of A."""
        if self.spectral_radius() >= 1.0:
            raise UnstableDynamicsError(
                f"spectral radius {self.spectral_radius():.6g} is not < 1"
            )
        if abs(np.linalg.det(self.A)) <= 1e-12:
            raise ValueError("A must be invertible (|det A| > 1e-12)")


def stationary_covariance(dyn: LatentDynamics) -> np.ndarray:
    """Solve Sigma = A Sigma A^T + Q via (I - A kron A) vec(Sigma) = vec(Q)."""
    if dyn.spectral_radius() >= 1.0:
        raise UnstableDynamicsError(
            "stationary covariance undefined: spectral radius >= 1"
        )
    p = dyn.p
    lhs = np.eye(p * p) - np.kron(dyn.A, dyn.A)
    sigma = np.linalg.solve(lhs, dyn.Q.reshape(p * p)).reshape(p, p)
    return 0.5 * (sigma + sigma.T)


def _psd_factor(M: np.ndarray) -> np.ndarray:
    """Factor L with L L^T = M for symmetric PSD M, tolerating singularity."""
    M = 0.5 * (M + M.T)
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(M)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def random_stable_dynamics(
    p: int,
    rng: np.random.Generator,
    eig_lo: float = 0.90,
    eig_hi: float = 0.99,
    sigma_p: float = 0.0,
) -> LatentDynamics:
    """Random orthogonal similarity of a diagonal spectrum in [eig_lo, eig_hi].

    Eigenvalues that close to 1 give slow, trackable drift while keeping A
    Schur stable and invertible.  Q = sigma_p^2 I.
    """
    vals = rng.uniform(eig_lo, eig_hi, size=p)
    Z = rng.standard_normal((p, p))
    U, r = np.linalg.qr(Z)
    U = U * np.sign(np.diag(r))
    A = (U * vals) @ U.T
    return LatentDynamics(A=A, Q=(sigma_p**2) * np.eye(p))


def simulate_latent(
    dyn: LatentDynamics,
    theta0: np.ndarray,
    steps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Iterate theta(t+1) = A theta(t) + w_p(t); returns shape (steps+1, p)."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (dyn.p,):
        raise ValueError(f"theta0 must have shape ({dyn.p},)")
    out = np.empty((steps + 1, dyn.p))
    out[0] = theta0
    if steps == 0:
        return out
    if np.any(dyn.Q):
        noise = rng.standard_normal((steps, dyn.p)) @ _psd_factor(dyn.Q).T
    else:
        noise = np.zeros((steps, dyn.p))
    for t in range(steps):
        out[t + 1] = dyn.A @ out[t] + noise[t]
    return out


@dataclass(frozen=True)
class SimulatedTruth:
    """Observed admissible trajectory plus the underlying linear deviation."""

    theta: np.ndarray  # (steps+1, p) after clamping
    deviation: np.ndarray  # (steps+1, p) unclamped linear path d(t)
    clamp_count: int


def simulate_latent_admissible(
    dyn: LatentDynamics,
    mean: np.ndarray,
    steps: int,
    rng: np.random.Generator,
    admissible: Callable[[np.ndarray], bool] | None = None,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    d0: np.ndarray | None = None,
) -> SimulatedTruth:
    """Simulate theta(t) = mean + d(t) with admissibility clamping.

    d(0) is drawn from the stationary distribution N(0, Sigma_theta) unless
    an explicit ``d0`` is given.  Clamping replaces the observed theta(t)
    with ``project(theta(t))`` whenever the predicate fails; the linear
    deviation itself keeps evolving unclamped.  A clamp rate above 20% of
    steps raises, since then the linear model no longer describes the data.
    """
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (dyn.p,):
        raise ValueError(f"mean must have shape ({dyn.p},)")
    if admissible is not None and not admissible(mean):
        raise SimulationMisconfiguredError("mean parameter vector is not admissible")
    if d0 is None:
        sigma = stationary_covariance(dyn)
        d0 = _psd_factor(sigma) @ rng.standard_normal(dyn.p)
    deviation = simulate_latent(dyn, d0, steps, rng)
    theta = mean[None, :] + deviation
    clamp_count = 0
    if admissible is not None:
        if project is None:
            raise ValueError("admissible predicate given without a projection")
        for t in range(steps + 1):
            if not admissible(theta[t]):
                theta[t] = project(theta[t])
                clamp_count += 1
        if clamp_count > CLAMP_RATE_LIMIT * (steps + 1):
            raise SimulationMisconfiguredError(
                f"clamping fired on {clamp_count}/{steps + 1} steps; "
                "process noise too large relative to the admissible mean"
            )
    return SimulatedTruth(theta=theta, deviation=deviation, clamp_count=clamp_count)


def measure_gradient(
    model: GradientOracleModel,
    x: np.ndarray,
    theta: np.ndarray,
    rng: np.random.Generator | None = None,
    noise: bool = True,
) -> np.ndarray:
    """y = C(x) theta + w_m, w_m ~ N(0, noise_std^2 I); exact when disabled."""
    y = model.C(np.asarray(x, dtype=float)) @ np.asarray(theta, dtype=float)
    if noise and model.noise_std > 0:
        if rng is None:
            raise ValueError("rng required when measurement noise is enabled")
        y = y + model.noise_std * rng.standard_normal(model.n)
    return y


@dataclass(frozen=True)
class TrajectoryBundle:
    """Ground truth over t = 0..T plus the N collected (x, y) pairs."""

    theta: np.ndarray  # (T+1, p)
    x: np.ndarray  # (N, n)
    y: np.ndarray  # (N, n)
    offset: np.ndarray | None
    clamp_count: int

    def __post_init__(self) -> None:
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have matching shapes")
        if self.n_collect > self.horizon + 1:
            raise ValueError("N must be <= T+1")

    @property
    def horizon(self) -> int:
        """T: last simulated time index."""
        return self.theta.shape[0] - 1

    @property
    def n_collect(self) -> int:
        """N: number of collected measurements."""
        return self.x.shape[0]


def explore_collect(
    model: GradientOracleModel,
    theta_path: np.ndarray,
    policy: str,
    n_collect: int,
    rng: np.random.Generator,
    x0: np.ndarray | None = None,
    eta: float = 1e-3,
    box_lo: np.ndarray | None = None,
    box_hi: np.ndarray | None = None,
    sequence: np.ndarray | None = None,
    offset: np.ndarray | None = None,
    clamp_count: int = 0,
) -> TrajectoryBundle:
    """Drive query points for t = 0..N-1 and record noisy gradients.

    Policies: ``static-gd`` takes x(t+1) = x(t) - eta y(t) from x0;
    ``random-box`` samples x(t) i.i.d. uniform on [box_lo, box_hi];
    ``fixed-sequence`` replays a provided (N, n) array.  Iterates leaving
    the safety box by more than 10x its radius abort collection.
    """
    theta_path = np.asarray(theta_path, dtype=float)
    if n_collect < 1:
        raise ValueError("N must be >= 1")
    if n_collect > theta_path.shape[0]:
        raise ValueError("N must be <= T+1 (need truth at every collection step)")
    if policy not in ("static-gd", "random-box", "fixed-sequence"):
        raise ValueError(f"unknown exploration policy {policy!r}")

    if box_lo is None or box_hi is None:
        box_lo = -np.ones(model.n)
        box_hi = np.ones(model.n)
    box_lo = np.asarray(box_lo, dtype=float)
    box_hi = np.asarray(box_hi, dtype=float)
    center = 0.5 * (box_lo + box_hi)
    radius = 0.5 * float(np.abs(box_hi - box_lo).max())
    if x0 is not None:
        # A start far outside the box widens the guard rather than aborting
        # immediately; the guard is about runaway iterates, not the start.
        radius = max(radius, float(np.abs(np.asarray(x0, dtype=float) - center).max()))
    guard = 10.0 * max(radius, 1.0)

    xs = np.empty((n_collect, model.n))
    ys = np.empty((n_collect, model.n))
    if policy == "fixed-sequence":
        if sequence is None:
            raise ValueError("fixed-sequence policy requires a sequence")
        sequence = np.asarray(sequence, dtype=float)
        if sequence.shape[0] < n_collect or sequence.shape[1] != model.n:
            raise ValueError("sequence must have shape (N, n) or longer")
    x = np.array(center if x0 is None else x0, dtype=float)
    for t in range(n_collect):
        if policy == "random-box":
            x = rng.uniform(box_lo, box_hi)
        elif policy == "fixed-sequence":
            x = sequence[t]
        if np.abs(x - center).max() > guard:
            raise ExplorationDivergedError(
                f"exploration iterate at t={t} left the safety box "
                f"(|x - center| = {np.abs(x - center).max():.3g} > {guard:.3g})"
            )
        xs[t] = x
        ys[t] = measure_gradient(model, x, theta_path[t], rng)
        if policy == "static-gd":
            x = x - eta * ys[t]
    return TrajectoryBundle(
        theta=theta_path, x=xs, y=ys, offset=offset, clamp_count=clamp_count
    )


def bundle_csv(bundle: TrajectoryBundle) -> str:
    """Trajectory dump: t, phase, truth, and the collected (x, y) pairs."""
    p = bundle.theta.shape[1]
    n = bundle.x.shape[1]
    header = (
        ["t", "phase"]
        + vector_columns("theta_true", p)
        + vector_columns("x", n)
        + vector_columns("y", n)
    )
    rows = []
    for t in range(bundle.horizon + 1):
        collect = t < bundle.n_collect
        row: list = [t, "collect" if collect else "predict"]
        row += list(bundle.theta[t])
        row += list(bundle.x[t]) if collect else [None] * n
        row += list(bundle.y[t]) if collect else [None] * n
        rows.append(row)
    return render_csv(header, rows)

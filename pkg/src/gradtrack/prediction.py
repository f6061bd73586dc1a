"""Forecasting beyond the data window and predicted-minimizer recovery.

After collection stops at t = N-1, the last reconstruction theta_tilde(N-k)
is propagated through the identified dynamics,

    theta_hat(t) = A_hat^H theta_tilde(N-k),  H = t - (N - k),

so the exponent at t = N is exactly k and grows by one per step.  The
predicted minimizer solves C(x) theta_hat(t) = 0: closed form for the
quadratic family, damped Newton with Armijo backtracking otherwise.
Forecasts that leave the admissible parameter set are projected back before
solving and flagged.  The true minimizer x*(t) is always computed by the
same solver applied to the true theta(t), so tracking error isolates
parameter and forecast error rather than solver mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import TrajectoryBundle
from .errors import NonconvergenceError
from .estimation import WindowedEstimate
from .identification import IdentifiedDynamics
from .problems import (
    GradientOracleModel,
    MU_FLOOR_DEFAULT,
    evaluate_cost,
    quadratic_parts,
)
from .tables import render_csv, vector_columns

ARMIJO_C1 = 1e-4
MIN_STEP = 2.0**-30
GRAD_BOUND = 1e-8  # first-order optimality bound every returned iterate must meet


@dataclass(frozen=True)
class Forecast:
    """Propagated parameter estimate for one target time."""

    t: int
    horizon_exponent: int  # H = t - (N - k)
    theta_hat: np.ndarray
    anchor: WindowedEstimate


@dataclass(frozen=True)
class MinimizerResult:
    x_hat: np.ndarray
    residual_norm: float  # |C(x_hat) theta|_2 for the theta actually solved
    iterations: int
    method: str  # closed-form | newton
    projected: bool


def forecast(
    ident: IdentifiedDynamics,
    anchor: WindowedEstimate,
    t_target: int,
    n_data: int,
    k: int,
) -> Forecast:
    """theta_hat = A_hat^H anchor by iterated matrix-vector products."""
    if anchor.t != n_data - k:
        raise ValueError(f"anchor must be the estimate at t = N-k = {n_data - k}, got t = {anchor.t}")
    if t_target < n_data:
        raise ValueError("forecast targets t >= N")
    if ident.spectral_radius >= 1.0:
        raise ValueError("forecast requires stabilized dynamics (spectral radius < 1)")
    H = t_target - (n_data - k)
    v = anchor.theta_tilde.copy()
    for _ in range(H):
        v = ident.A_hat @ v
    return Forecast(t=t_target, horizon_exponent=H, theta_hat=v, anchor=anchor)


def recover_minimizer_quadratic(
    theta_hat: np.ndarray,
    mu_floor: float = MU_FLOOR_DEFAULT,
) -> MinimizerResult:
    """Closed-form x = H^-1 btilde for the (btilde, H) parameter layout.

    Eigenvalues of H below mu_floor are raised to it first, so indefinite
    forecasts still yield a finite, well-conditioned solution.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    if theta_hat.shape != (5,):
        raise ValueError("quadratic layout requires p = 5")
    H, btilde = quadratic_parts(theta_hat)
    vals, vecs = np.linalg.eigh(H)
    projected = bool(vals.min() < mu_floor)
    vals = np.maximum(vals, mu_floor)
    x_hat = vecs @ ((vecs.T @ btilde) / vals)
    # Gradient of the projected problem: 2 H x - 2 btilde.
    residual = 2.0 * (vecs @ (vals * (vecs.T @ x_hat)) - btilde)
    return MinimizerResult(
        x_hat=x_hat,
        residual_norm=float(np.linalg.norm(residual)),
        iterations=0,
        method="closed-form",
        projected=projected,
    )


def recover_minimizer_newton(
    model: GradientOracleModel,
    theta_hat: np.ndarray,
    x_init: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 100,
    mu_floor: float = MU_FLOOR_DEFAULT,
) -> MinimizerResult:
    """Damped Newton on f(., theta_hat) after admissibility projection."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    projected = not model.admissible(theta_hat, mu_floor)
    theta = model.project_theta(theta_hat, mu_floor) if projected else theta_hat
    x = np.asarray(x_init, dtype=float).copy()
    grad = model.C(x) @ theta
    grad_norm = float(np.linalg.norm(grad))
    for iterations in range(max_iter + 1):
        if grad_norm <= tol:
            return MinimizerResult(
                x_hat=x,
                residual_norm=grad_norm,
                iterations=iterations,
                method="newton",
                projected=projected,
            )
        if iterations == max_iter:
            break
        step = -np.linalg.solve(model.hess(x, theta), grad)
        slope = float(grad @ step)
        f0 = evaluate_cost(model, x, theta)
        if -ARMIJO_C1 * slope <= 8.0 * np.finfo(float).eps * (1.0 + abs(f0)):
            # predicted decrease is below the rounding floor of f: cost
            # comparisons are noise, so take the undamped Newton step
            x = x + step
            grad = model.C(x) @ theta
            grad_norm = float(np.linalg.norm(grad))
            continue
        alpha = 1.0
        while True:
            x_new = x + alpha * step
            if evaluate_cost(model, x_new, theta) <= f0 + ARMIJO_C1 * alpha * slope:
                break
            alpha *= 0.5
            if alpha < MIN_STEP:
                # cost differences below machine precision: the iterate is at
                # the numeric floor, so accept it if it meets the optimality bound
                if grad_norm <= GRAD_BOUND:
                    return MinimizerResult(
                        x_hat=x,
                        residual_norm=grad_norm,
                        iterations=iterations,
                        method="newton",
                        projected=projected,
                    )
                raise NonconvergenceError(
                    f"line search stalled below 2^-30 at |grad| = {grad_norm:.3e}",
                    x_best=x,
                    residual_norm=grad_norm,
                )
        x = x_new
        grad = model.C(x) @ theta
        grad_norm = float(np.linalg.norm(grad))
    if grad_norm <= GRAD_BOUND:
        return MinimizerResult(
            x_hat=x,
            residual_norm=grad_norm,
            iterations=max_iter,
            method="newton",
            projected=projected,
        )
    raise NonconvergenceError(
        f"no convergence in {max_iter} Newton iterations (|grad| = {grad_norm:.3e})",
        x_best=x,
        residual_norm=grad_norm,
    )


@dataclass(frozen=True)
class TrackPoint:
    t: int
    phase: str  # collect | predict
    x_hat: np.ndarray  # exploration iterate during collect, prediction after
    x_star: np.ndarray
    theta_hat: np.ndarray | None  # None during collect
    theta_true: np.ndarray
    projected: bool | None  # None during collect


@dataclass(frozen=True)
class TrackResult:
    points: list[TrackPoint]
    n_collect: int
    projection_count: int

    def slice_arrays(self, t_lo: int, t_hi: int) -> tuple[np.ndarray, np.ndarray]:
        """(predicted, true) minimizer arrays over t = t_lo..t_hi inclusive."""
        pts = self.points[t_lo : t_hi + 1]
        if not pts or pts[0].t != t_lo or pts[-1].t != t_hi:
            raise ValueError(f"tracked range does not cover [{t_lo}, {t_hi}]")
        return (
            np.stack([p.x_hat for p in pts]),
            np.stack([p.x_star for p in pts]),
        )


def _solve(
    model: GradientOracleModel,
    theta: np.ndarray,
    warm: np.ndarray,
    solver: str,
    mu_floor: float,
    tol: float,
    max_iter: int,
) -> MinimizerResult:
    if solver == "closed-form":
        return recover_minimizer_quadratic(theta, mu_floor)
    return recover_minimizer_newton(model, theta, warm, tol, max_iter, mu_floor)


def track(
    model: GradientOracleModel,
    ident: IdentifiedDynamics,
    estimates: list[WindowedEstimate],
    bundle: TrajectoryBundle,
    solver: str = "auto",
    mu_floor: float = MU_FLOOR_DEFAULT,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> TrackResult:
    """Full tracked run over t = 0..T.

    Collect-phase rows report the exploration iterate as that phase's
    prediction; from t = N on, the forecast drives the minimizer solve with
    warm starts chained from the last collected point.  Solver errors are
    re-raised with the failing t attached.
    """
    if solver == "auto":
        solver = "closed-form" if model.name == "quadratic-tracking" else "newton"
    if solver not in ("closed-form", "newton"):
        raise ValueError(f"unknown solver {solver!r}")
    if ident.spectral_radius >= 1.0:
        raise ValueError("track requires stabilized dynamics; apply stabilize first")
    n_collect = bundle.n_collect
    horizon = bundle.horizon
    anchor = estimates[-1]

    points: list[TrackPoint] = []
    projection_count = 0
    warm_true = bundle.x[0]
    warm_pred = bundle.x[n_collect - 1]
    theta_pred = anchor.theta_tilde.copy()
    for _ in range(n_collect - anchor.t):  # advance to H = k at t = N
        theta_pred = ident.A_hat @ theta_pred

    for t in range(horizon + 1):
        theta_true = bundle.theta[t]
        try:
            true_res = _solve(model, theta_true, warm_true, solver, mu_floor, tol, max_iter)
        except NonconvergenceError as err:
            raise NonconvergenceError(
                f"true-minimizer solve failed at t={t}: {err}",
                x_best=err.x_best,
                residual_norm=err.residual_norm,
            ) from err
        warm_true = true_res.x_hat
        if t < n_collect:
            points.append(
                TrackPoint(
                    t=t,
                    phase="collect",
                    x_hat=bundle.x[t],
                    x_star=true_res.x_hat,
                    theta_hat=None,
                    theta_true=theta_true,
                    projected=None,
                )
            )
            continue
        if t > n_collect:
            theta_pred = ident.A_hat @ theta_pred
        try:
            pred_res = _solve(model, theta_pred, warm_pred, solver, mu_floor, tol, max_iter)
        except NonconvergenceError as err:
            raise NonconvergenceError(
                f"predicted-minimizer solve failed at t={t}: {err}",
                x_best=err.x_best,
                residual_norm=err.residual_norm,
            ) from err
        warm_pred = pred_res.x_hat
        projection_count += int(pred_res.projected)
        points.append(
            TrackPoint(
                t=t,
                phase="predict",
                x_hat=pred_res.x_hat,
                x_star=true_res.x_hat,
                theta_hat=theta_pred.copy(),
                theta_true=theta_true,
                projected=pred_res.projected,
            )
        )
    return TrackResult(points=points, n_collect=n_collect, projection_count=projection_count)


def rmse(predicted: np.ndarray, truth: np.ndarray, t_eval: int, t_end: int) -> float:
    """sqrt(mean |x_hat - x_star|^2) over t = t_eval..t_end, divisor T-T_eval+1."""
    predicted = np.asarray(predicted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    count = t_end - t_eval + 1
    if count < 1:
        raise ValueError("evaluation window must contain at least one step")
    if predicted.shape != truth.shape or predicted.shape[0] != count:
        raise ValueError(
            f"sequences must both cover [{t_eval}, {t_end}] "
            f"({count} steps), got {predicted.shape} vs {truth.shape}"
        )
    return float(np.sqrt(np.sum((predicted - truth) ** 2) / count))


def trajectory_csv(result: TrackResult) -> str:
    """Per-run dump: exploration/predicted iterates, truths, projection flags."""
    first = result.points[0]
    n = len(first.x_hat)
    p = len(first.theta_true)
    header = (
        ["t", "phase"]
        + vector_columns("xhat", n)
        + vector_columns("xstar", n)
        + vector_columns("theta_hat", p)
        + vector_columns("theta_true", p)
        + ["projected"]
    )
    rows = []
    for pt in result.points:
        row: list = [pt.t, pt.phase]
        row += list(pt.x_hat)
        row += list(pt.x_star)
        row += list(pt.theta_hat) if pt.theta_hat is not None else [None] * p
        row += list(pt.theta_true)
        row.append(None if pt.projected is None else int(pt.projected))
        rows.append(row)
    return render_csv(header, rows)

"""Windowed Gauss-Markov reconstruction of the latent parameter.

Stacking k consecutive measurements y(t..t+k-1) against their gradient maps
gives y_bar = C_bar theta(t) + drift + noise with block-diagonal noise
covariance R_bar = I_k kron R.  The best linear unbiased estimate treats the
window as frozen at time t:

    theta_tilde(t) = (C_bar^T R_bar^-1 C_bar)^-1 C_bar^T R_bar^-1 y_bar

The estimator deliberately ignores the within-window drift term; its effect
shows up only as empirical error.  The default numerical path whitens by the
Cholesky factor of R and QR-factorizes the whitened stack; a Cholesky of the
Gram matrix is available as a faster opt-in.  No explicit inverse of the
gain is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .dynamics import TrajectoryBundle
from .errors import ExcitationError, IllConditionedWindowError
from .problems import GradientOracleModel
from .tables import render_csv, vector_columns

RANK_TOL = 1e-10
GRAM_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class StackedWindow:
    """k stacked measurements starting at time t.

    ``R_chol`` is the lower Cholesky factor of the single-step R; the full
    R_bar = I_k kron R is materialized on demand only.
    """

    t: int
    y_bar: np.ndarray  # (k*n,)
    C_bar: np.ndarray  # (k*n, p)
    R_chol: np.ndarray  # (n, n) lower triangular
    k: int
    n: int
    p: int

    @property
    def R_bar(self) -> np.ndarray:
        R = self.R_chol @ self.R_chol.T
        return np.kron(np.eye(self.k), R)


@dataclass(frozen=True)
class WindowedEstimate:
    """Reconstruction at time t with its exact noise covariance.

    alpha_k = lambda_min(C_bar^T R_bar^-1 C_bar) is the excitation constant;
    lambda_max(sigma_eta) * alpha_k = 1 by construction.
    """

    t: int
    theta_tilde: np.ndarray
    sigma_eta: np.ndarray
    alpha_k: float


def build_window(bundle: TrajectoryBundle, model: GradientOracleModel, t: int, k: int) -> StackedWindow:
    """Stack measurements t..t+k-1 into one weighted regression problem."""
    n_collect = bundle.n_collect
    if k < 1:
        raise ValueError("k must be >= 1")
    if t < 0 or t + k > n_collect:
        raise ValueError(f"window [{t}, {t + k}) outside collected range [0, {n_collect})")
    if k * model.n < model.p:
        raise ValueError(f"window too short: k*n = {k * model.n} < p = {model.p}")
    C_bar = np.vstack([model.C(bundle.x[j]) for j in range(t, t + k)])
    y_bar = bundle.y[t : t + k].reshape(-1)
    svals = np.linalg.svd(C_bar, compute_uv=False)
    if svals[-1] <= RANK_TOL * svals[0]:
        raise ExcitationError(
            f"stacked window at t={t} is rank deficient "
            f"(sigma_min/sigma_max = {svals[-1] / svals[0]:.3e})",
            window_start=t,
        )
    return StackedWindow(
        t=t,
        y_bar=y_bar,
        C_bar=C_bar,
        R_chol=np.linalg.cholesky(model.R),
        k=k,
        n=model.n,
        p=model.p,
    )


def _whiten(window: StackedWindow) -> tuple[np.ndarray, np.ndarray]:
    """Apply R^{-1/2} blockwise to C_bar and y_bar."""
    k, n, p = window.k, window.n, window.p
    C_blocks = window.C_bar.reshape(k, n, p)
    y_blocks = window.y_bar.reshape(k, n, 1)
    L = window.R_chol[None, :, :]
    W = np.linalg.solve(L, C_blocks).reshape(k * n, p)
    y_w = np.linalg.solve(L, y_blocks).reshape(k * n)
    return W, y_w


def gauss_markov_estimate(window: StackedWindow, method: str = "qr") -> WindowedEstimate:
    """Weighted least squares over one window.

    method="qr" (default): QR of the whitened stack.  method="cholesky":
    Cholesky of the Gram matrix C_bar^T R_bar^-1 C_bar.  Both agree to 1e-9
    on well-posed windows.
    """
    W, y_w = _whiten(window)
    p = window.p
    if method == "qr":
        Q, Rq = np.linalg.qr(W)
        svals = np.linalg.svd(Rq, compute_uv=False)
        _check_condition(svals[0] ** 2, svals[-1] ** 2, window.t)
        theta = solve_triangular(Rq, Q.T @ y_w)
        Rinv = solve_triangular(Rq, np.eye(p))
        sigma = Rinv @ Rinv.T
        alpha = svals[-1] ** 2
    elif method == "cholesky":
        G = W.T @ W
        evals = np.linalg.eigvalsh(G)
        _check_condition(evals[-1], evals[0], window.t)
        c = cho_factor(G, lower=True)
        theta = cho_solve(c, W.T @ y_w)
        sigma = cho_solve(c, np.eye(p))
        alpha = float(evals[0])
    else:
        raise ValueError(f"unknown estimation method {method!r}")
    return WindowedEstimate(
        t=window.t,
        theta_tilde=theta,
        sigma_eta=0.5 * (sigma + sigma.T),
        alpha_k=float(alpha),
    )


def _check_condition(gram_max: float, gram_min: float, t: int) -> None:
    if gram_min <= 0 or gram_max / gram_min > GRAM_CONDITION_LIMIT:
        cond = np.inf if gram_min <= 0 else gram_max / gram_min
        raise IllConditionedWindowError(
            f"window Gram matrix at t={t} has condition {cond:.3e} > {GRAM_CONDITION_LIMIT:.0e}",
            window_start=t,
        )


def gauss_markov_gain_check(window: StackedWindow) -> float:
    """|K* C_bar - I|_F where K* is the estimator gain.

    Applies the estimator's own factorization to the columns of C_bar, so
    the residual reflects the exact arithmetic used on measurements.
    """
    W, _ = _whiten(window)
    Q, Rq = np.linalg.qr(W)
    KC = solve_triangular(Rq, Q.T @ W)
    return float(np.linalg.norm(KC - np.eye(window.p)))


def estimate_all(
    bundle: TrajectoryBundle,
    model: GradientOracleModel,
    k: int,
    method: str = "qr",
) -> list[WindowedEstimate]:
    """One estimate per window start t = 0..N-k, in time order.

    Fails fast on the first bad window (the IV stage needs a contiguous
    sequence), annotating the error with the window index.
    """
    n_collect = bundle.n_collect
    if n_collect < k:
        raise ValueError(f"need at least k={k} measurements, have {n_collect}")
    return [
        gauss_markov_estimate(build_window(bundle, model, t, k), method=method)
        for t in range(n_collect - k + 1)
    ]


def min_alpha_k(estimates: list[WindowedEstimate]) -> float:
    if not estimates:
        raise ValueError("empty estimate sequence")
    return min(e.alpha_k for e in estimates)


def estimates_csv(estimates: list[WindowedEstimate]) -> str:
    """Optional dump: t, reconstructed components, excitation constant."""
    if not estimates:
        raise ValueError("empty estimate sequence")
    p = len(estimates[0].theta_tilde)
    header = ["t"] + vector_columns("theta_tilde", p) + ["alpha_k"]
    rows = [[e.t, *e.theta_tilde, e.alpha_k] for e in estimates]
    return render_csv(header, rows)

"""Identification of the parameter dynamics from reconstructed estimates.

The reconstruction noise eta(t) enters both sides of the regression
theta_tilde(t+1) ~ A theta_tilde(t), so ordinary least squares is biased
toward zero (attenuation -A Sigma_eta).  Using the lag-k instrument
z(t) = theta_tilde(t-k), whose noise is independent of the noise inside
windows t and t+1, removes the endogeneity:

    A_hat = [sum theta_tilde(t+1) z(t)^T] [sum theta_tilde(t) z(t)^T]^-1

with the sum over t = k..N-k-1 (N - 2k terms).  The raw estimate is always
reported for error metrics; spectral clipping for forecasting is a separate,
explicitly flagged step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import IllConditionedMomentsError, InsufficientDataError
from .estimation import WindowedEstimate

MOMENT_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class IdentifiedDynamics:
    """Estimated transition matrix with conditioning and stability metadata."""

    A_hat: np.ndarray
    m0_condition: float
    spectral_radius: float
    clipped: bool
    sample_count: int


def _stack_thetas(estimates: list[WindowedEstimate]) -> np.ndarray:
    if not estimates:
        raise InsufficientDataError("empty estimate sequence")
    return np.stack([e.theta_tilde for e in estimates])


def _solve_moments(M1: np.ndarray, M0: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    svals = np.linalg.svd(M0, compute_uv=False)
    cond = float(np.inf) if svals[-1] == 0 else float(svals[0] / svals[-1])
    if not np.isfinite(cond) or cond > MOMENT_CONDITION_LIMIT:
        raise IllConditionedMomentsError(
            f"{what} moment matrix has condition {cond:.3e} > {MOMENT_CONDITION_LIMIT:.0e}"
        )
    # A_hat = M1 M0^-1 via the transposed system, no explicit inverse.
    A_hat = np.linalg.solve(M0.T, M1.T).T
    return A_hat, cond


def iv_identify(estimates: list[WindowedEstimate], k: int) -> IdentifiedDynamics:
    """Lag-k instrumental-variable estimate of A.

    The estimate sequence must cover t = 0..N-k contiguously (as produced by
    estimate_all); the instrument lag equals the estimation window k and is
    not independently tunable.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    thetas = _stack_thetas(estimates)
    p = thetas.shape[1]
    n_data = len(estimates) + k - 1  # N: estimates run t = 0..N-k
    if n_data < 2 * k + p:
        raise InsufficientDataError(
            f"IV needs N >= 2k+p = {2 * k + p}, got N = {n_data} "
            f"({len(estimates)} estimates with k = {k})"
        )
    # Sum over t = k..N-k-1: rows t+1, t, and instrument rows t-k.
    X1 = thetas[k + 1 : n_data - k + 1]
    X0 = thetas[k : n_data - k]
    Z = thetas[0 : n_data - 2 * k]
    M1 = X1.T @ Z
    M0 = X0.T @ Z
    A_hat, cond = _solve_moments(M1, M0, "instrument")
    return IdentifiedDynamics(
        A_hat=A_hat,
        m0_condition=cond,
        spectral_radius=float(np.abs(np.linalg.eigvals(A_hat)).max()),
        clipped=False,
        sample_count=n_data - 2 * k,
    )


def ols_identify(estimates: list[WindowedEstimate]) -> IdentifiedDynamics:
    """Lag-free least squares baseline; biased by the reconstruction noise."""
    thetas = _stack_thetas(estimates)
    p = thetas.shape[1]
    if len(estimates) < p + 1:
        raise InsufficientDataError(
            f"OLS needs at least p+1 = {p + 1} estimates, got {len(estimates)}"
        )
    X1 = thetas[1:]
    X0 = thetas[:-1]
    M1 = X1.T @ X0
    M0 = X0.T @ X0
    A_hat, cond = _solve_moments(M1, M0, "least-squares")
    return IdentifiedDynamics(
        A_hat=A_hat,
        m0_condition=cond,
        spectral_radius=float(np.abs(np.linalg.eigvals(A_hat)).max()),
        clipped=False,
        sample_count=len(estimates) - 1,
    )


def identification_error(A_hat: np.ndarray, A_true: np.ndarray) -> tuple[float, float]:
    """(Frobenius, spectral) norms of A_hat - A_true."""
    A_hat = np.asarray(A_hat, dtype=float)
    A_true = np.asarray(A_true, dtype=float)
    if A_hat.shape != A_true.shape:
        raise ValueError("shape mismatch")
    diff = A_hat - A_true
    return float(np.linalg.norm(diff)), float(np.linalg.norm(diff, 2))


def stabilize(A_hat: np.ndarray, epsilon: float = 1e-3) -> tuple[np.ndarray, bool]:
    """Scale A_hat inside the unit circle if its spectral radius is >= 1."""
    if not 0 < epsilon <= 0.1:
        raise ValueError("epsilon must be in (0, 0.1]")
    A_hat = np.asarray(A_hat, dtype=float)
    rho = float(np.abs(np.linalg.eigvals(A_hat)).max())
    if rho < 1.0:
        return A_hat.copy(), False
    return A_hat * ((1.0 - epsilon) / rho), True


def stabilize_dynamics(ident: IdentifiedDynamics, epsilon: float = 1e-3) -> IdentifiedDynamics:
    """Forecast-ready copy: clipped spectrum, flag recorded."""
    A_clipped, clipped = stabilize(ident.A_hat, epsilon)
    if not clipped:
        return ident
    return replace(
        ident,
        A_hat=A_clipped,
        spectral_radius=float(np.abs(np.linalg.eigvals(A_clipped)).max()),
        clipped=True,
    )


def a_hat_csv(ident: IdentifiedDynamics) -> str:
    """Row-major dump of A_hat, one CSV line per matrix row."""
    lines = [",".join("%.17g" % v for v in row) for row in ident.A_hat]
    return "\n".join(lines) + "\n"

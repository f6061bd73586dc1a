"""Computable components of the forecast-error decomposition.

The tracking error at horizon exponent H splits into a reconstruction-noise
term, an anchor-decay term and an irreducible future-process-noise floor:

    noise_term       sqrt(p / min_t alpha_k)
    anchor_decay     |A^H|_2
    prediction_floor sqrt(tr sum_{j<H} A^j Q (A^j)^T)

The floor grows monotonically and saturates at sqrt(tr Sigma_theta).  The
analysis constants multiplying these pieces are unspecified, so the module
exposes components only and never assembles a single bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import LatentDynamics, stationary_covariance
from .estimation import WindowedEstimate, min_alpha_k
from .tables import render_csv


@dataclass(frozen=True)
class BoundComponents:
    H: int
    noise_term: float
    anchor_decay: float
    prediction_floor: float
    floor_limit: float


def prediction_floor(dyn: LatentDynamics, H: int) -> float:
    """sqrt(tr sum_{j=0..H-1} A^j Q (A^j)^T) via S <- A S A^T + Q from S = 0."""
    if H < 0:
        raise ValueError("H must be >= 0")
    S = np.zeros_like(dyn.Q)
    for _ in range(H):
        S = dyn.A @ S @ dyn.A.T + dyn.Q
    return float(np.sqrt(max(np.trace(S), 0.0)))


def prediction_floor_curve(dyn: LatentDynamics, H_values: Sequence[int]) -> list[float]:
    """prediction_floor at several horizons sharing one accumulation pass."""
    wanted = sorted(set(int(h) for h in H_values))
    if wanted and wanted[0] < 0:
        raise ValueError("H must be >= 0")
    out: dict[int, float] = {}
    S = np.zeros_like(dyn.Q)
    h = 0
    for target in wanted:
        while h < target:
            S = dyn.A @ S @ dyn.A.T + dyn.Q
            h += 1
        out[target] = float(np.sqrt(max(np.trace(S), 0.0)))
    return [out[int(h)] for h in H_values]


def anchor_decay(dyn: LatentDynamics, H: int) -> float:
    """|A^H|_2: power by repeated squaring, then the largest singular value."""
    if H < 0:
        raise ValueError("H must be >= 0")
    power = np.linalg.matrix_power(dyn.A, H)
    return float(np.linalg.norm(power, 2))


def noise_term(estimates: list[WindowedEstimate]) -> float:
    """sqrt(p / min_t alpha_k) over the estimate sequence."""
    p = len(estimates[0].theta_tilde)
    return float(np.sqrt(p / min_alpha_k(estimates)))


def diagnostics_table(
    dyn: LatentDynamics,
    estimates: list[WindowedEstimate],
    H_values: Sequence[int],
) -> list[BoundComponents]:
    limit = float(np.sqrt(max(np.trace(stationary_covariance(dyn)), 0.0)))
    noise = noise_term(estimates)
    floors = prediction_floor_curve(dyn, H_values)
    return [
        BoundComponents(
            H=int(H),
            noise_term=noise,
            anchor_decay=anchor_decay(dyn, int(H)),
            prediction_floor=floor,
            floor_limit=limit,
        )
        for H, floor in zip(H_values, floors)
    ]


def diagnostics_csv(rows: list[BoundComponents]) -> str:
    header = ["H", "noise_term", "anchor_decay", "prediction_floor", "floor_limit"]
    return render_csv(
        header,
        [[r.H, r.noise_term, r.anchor_decay, r.prediction_floor, r.floor_limit] for r in rows],
    )

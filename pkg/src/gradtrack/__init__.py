"""Tracking time-varying optimizers from noisy gradient measurements.

Pipeline: windowed Gauss-Markov reconstruction of the latent parameter,
lag-k instrumental-variable identification of its linear dynamics, and
forecast-based minimizer prediction, with a seeded Monte Carlo harness
exposed through a CLI and an HTTP service.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, load_config, parse_config
from .diagnostics import anchor_decay, noise_term, prediction_floor
from .dynamics import (
    LatentDynamics,
    TrajectoryBundle,
    explore_collect,
    measure_gradient,
    random_stable_dynamics,
    simulate_latent,
    simulate_latent_admissible,
    stationary_covariance,
)
from .estimation import (
    StackedWindow,
    WindowedEstimate,
    build_window,
    estimate_all,
    gauss_markov_estimate,
    gauss_markov_gain_check,
)
from .harness import TrialRecord, run_sweep, run_trial, selftest
from .identification import (
    IdentifiedDynamics,
    identification_error,
    iv_identify,
    ols_identify,
    stabilize,
)
from .prediction import (
    Forecast,
    MinimizerResult,
    forecast,
    recover_minimizer_newton,
    recover_minimizer_quadratic,
    rmse,
    track,
)
from .problems import GradientOracleModel, make_problem

__all__ = [
    "ExperimentConfig",
    "Forecast",
    "GradientOracleModel",
    "IdentifiedDynamics",
    "LatentDynamics",
    "MinimizerResult",
    "StackedWindow",
    "TrajectoryBundle",
    "TrialRecord",
    "WindowedEstimate",
    "anchor_decay",
    "build_window",
    "estimate_all",
    "explore_collect",
    "forecast",
    "gauss_markov_estimate",
    "gauss_markov_gain_check",
    "identification_error",
    "iv_identify",
    "load_config",
    "make_problem",
    "measure_gradient",
    "noise_term",
    "ols_identify",
    "parse_config",
    "prediction_floor",
    "random_stable_dynamics",
    "recover_minimizer_newton",
    "recover_minimizer_quadratic",
    "rmse",
    "run_sweep",
    "run_trial",
    "selftest",
    "simulate_latent",
    "simulate_latent_admissible",
    "stabilize",
    "stationary_covariance",
    "track",
]

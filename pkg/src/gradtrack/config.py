"""Experiment configuration: flat key-value text with dotted prefixes.

Format, one setting per line::

    # comment
    experiment.id = tracking
    noise.sigma_m = 0.6
    sweep.N_values = 30, 50, 100, 150, 200

Unknown or duplicated keys are hard errors (no silent defaults for
misspellings).  Vector values are comma-separated.  Dimensions n and p come
from the problem registry; optional problem.n / problem.p entries are
cross-checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .problems import PROBLEMS, make_problem


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    problem: str
    n: int
    p: int
    k: int
    n_values: tuple[int, ...]
    horizon: int  # T
    t_eval: int
    sigma_m: float
    sigma_p: float
    policy: str
    eta: float
    x0: tuple[float, ...] | None
    box_lo: tuple[float, ...]
    box_hi: tuple[float, ...]
    sequence: tuple[tuple[float, ...], ...] | None
    trials: int
    seed: int
    workers: int  # 0 = available parallelism
    out_dir: str
    epsilon: float
    mu_floor: float
    fixed_a: bool
    eig_lo: float
    eig_hi: float
    theta_mean: tuple[float, ...]
    theta0: tuple[float, ...] | None
    clamp: bool

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError("window.k must be >= 1")
        if self.k * self.n < self.p:
            raise ConfigError(f"window too short: k*n = {self.k * self.n} < p = {self.p}")
        if not self.n_values:
            raise ConfigError("sweep.N_values must be nonempty")
        floor = 2 * self.k + self.p
        for n_data in self.n_values:
            if n_data < floor:
                raise ConfigError(
                    f"N = {n_data} violates N >= 2k+p = {floor} "
                    "(identification needs N-2k >= p instrument terms)"
                )
        if self.horizon < max(self.n_values):
            raise ConfigError("horizon.T must be >= every N in sweep.N_values")
        if not 0 <= self.t_eval <= self.horizon:
            raise ConfigError("horizon.T_eval must lie in [0, T]")
        if self.trials < 1:
            raise ConfigError("run.trials must be >= 1")
        if not 0 <= self.seed < (1 << 64):
            raise ConfigError("run.seed must fit in 64 bits")
        if self.workers < 0:
            raise ConfigError("run.workers must be >= 0 (0 = available parallelism)")
        if self.sigma_m < 0 or self.sigma_p < 0:
            raise ConfigError("noise levels must be >= 0")
        if self.policy not in ("static-gd", "random-box", "fixed-sequence"):
            raise ConfigError(f"unknown exploration policy {self.policy!r}")
        if self.policy == "fixed-sequence":
            if not self.sequence:
                raise ConfigError("fixed-sequence exploration requires explore.sequence")
            for i, point in enumerate(self.sequence):
                if len(point) != self.n:
                    raise ConfigError(
                        f"explore.sequence point {i} must have n = {self.n} entries"
                    )
                inside = all(
                    lo <= coord <= hi
                    for coord, lo, hi in zip(point, self.box_lo, self.box_hi)
                )
                if not inside:
                    raise ConfigError(
                        f"explore.sequence point {i} lies outside the explore box"
                    )
        elif self.sequence:
            raise ConfigError("explore.sequence is only valid with explore.policy = fixed-sequence")
        if not 0 < self.epsilon <= 0.1:
            raise ConfigError("stabilize.epsilon must be in (0, 0.1]")
        if self.mu_floor <= 0:
            raise ConfigError("recover.mu_floor must be > 0")
        if not 0 < self.eig_lo <= self.eig_hi < 1:
            raise ConfigError("truth eigenvalue range must satisfy 0 < lo <= hi < 1")
        if len(self.theta_mean) != self.p:
            raise ConfigError(f"truth.theta_mean must have p = {self.p} entries")
        if self.theta0 is not None and len(self.theta0) != self.p:
            raise ConfigError(f"truth.theta0 must have p = {self.p} entries")
        for name, vec in (("explore.x0", self.x0), ("explore.box_lo", self.box_lo), ("explore.box_hi", self.box_hi)):
            if vec is not None and len(vec) != self.n:
                raise ConfigError(f"{name} must have n = {self.n} entries")
        if any(lo >= hi for lo, hi in zip(self.box_lo, self.box_hi)):
            raise ConfigError("explore box must have box_lo < box_hi componentwise")
        if self.clamp:
            model = make_problem(self.problem, self.sigma_m)
            if not model.admissible(np.asarray(self.theta_mean), self.mu_floor):
                raise ConfigError(
                    "truth.theta_mean is not admissible for the problem; "
                    "set an admissible mean or disable truth.clamp"
                )


_SCHEMA: dict[str, tuple[str, object]] = {
    # key: (type tag, default); _REQUIRED means the key must be present
    "experiment.id": ("str", None),
    "experiment.problem": ("str", None),
    "problem.n": ("int", -1),
    "problem.p": ("int", -1),
    "window.k": ("int", None),
    "sweep.N_values": ("int-list", None),
    "horizon.T": ("int", None),
    "horizon.T_eval": ("int", None),
    "noise.sigma_m": ("float", None),
    "noise.sigma_p": ("float", None),
    "explore.policy": ("str", "static-gd"),
    "explore.eta": ("float", 1e-3),
    "explore.x0": ("float-list", ()),
    "explore.box_lo": ("float-list", ()),
    "explore.box_hi": ("float-list", ()),
    "explore.sequence": ("point-list", ()),
    "run.trials": ("int", 30),
    "run.seed": ("int", 0),
    "run.workers": ("int", 0),
    "run.out": ("str", "out"),
    "stabilize.epsilon": ("float", 1e-3),
    "recover.mu_floor": ("float", 1e-3),
    "truth.fixed_A": ("bool", False),
    "truth.eig_lo": ("float", 0.90),
    "truth.eig_hi": ("float", 0.99),
    "truth.theta_mean": ("float-list", ()),
    "truth.theta0": ("float-list", ()),
    "truth.clamp": ("bool", True),
}

_REQUIRED = [key for key, (_, default) in _SCHEMA.items() if default is None]


def _convert(key: str, tag: str, raw: str):
    try:
        if tag == "str":
            return raw
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "bool":
            lowered = raw.lower()
            if lowered not in ("true", "false"):
                raise ValueError("expected true or false")
            return lowered == "true"
        if tag == "int-list":
            return tuple(int(part.strip()) for part in raw.split(",") if part.strip())
        if tag == "float-list":
            return tuple(float(part.strip()) for part in raw.split(",") if part.strip())
        if tag == "point-list":
            # semicolon-separated points, comma-separated coordinates
            return tuple(
                tuple(float(part.strip()) for part in group.split(",") if part.strip())
                for group in raw.split(";")
                if group.strip()
            )
    except ValueError as err:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({err})") from None
    raise AssertionError(f"unhandled tag {tag}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
        if key in values:
            raise ConfigError(f"duplicate config key {key!r} (line {lineno})")
        values[key] = _convert(key, _SCHEMA[key][0], raw)

    missing = [key for key in _REQUIRED if key not in values]
    if missing:
        raise ConfigError("missing required config keys: " + ", ".join(missing))
    for key, (_, default) in _SCHEMA.items():
        values.setdefault(key, default)

    problem = str(values["experiment.problem"])
    if problem not in PROBLEMS:
        known = ", ".join(sorted(PROBLEMS))
        raise ConfigError(f"unknown problem {problem!r}; registered: {known}")
    model = make_problem(problem, float(values["noise.sigma_m"]))
    for dim_key, actual in (("problem.n", model.n), ("problem.p", model.p)):
        declared = int(values[dim_key])
        if declared != -1 and declared != actual:
            raise ConfigError(f"{dim_key} = {declared} does not match the registered problem ({actual})")

    box_lo = tuple(values["explore.box_lo"]) or tuple(-1.0 for _ in range(model.n))
    box_hi = tuple(values["explore.box_hi"]) or tuple(1.0 for _ in range(model.n))
    theta_mean = tuple(values["truth.theta_mean"]) or tuple(0.0 for _ in range(model.p))
    cfg = ExperimentConfig(
        experiment_id=str(values["experiment.id"]),
        problem=problem,
        n=model.n,
        p=model.p,
        k=int(values["window.k"]),
        n_values=tuple(values["sweep.N_values"]),
        horizon=int(values["horizon.T"]),
        t_eval=int(values["horizon.T_eval"]),
        sigma_m=float(values["noise.sigma_m"]),
        sigma_p=float(values["noise.sigma_p"]),
        policy=str(values["explore.policy"]),
        eta=float(values["explore.eta"]),
        x0=tuple(values["explore.x0"]) or None,
        box_lo=box_lo,
        box_hi=box_hi,
        sequence=tuple(values["explore.sequence"]) or None,
        trials=int(values["run.trials"]),
        seed=int(values["run.seed"]),
        workers=int(values["run.workers"]),
        out_dir=str(values["run.out"]),
        epsilon=float(values["stabilize.epsilon"]),
        mu_floor=float(values["recover.mu_floor"]),
        fixed_a=bool(values["truth.fixed_A"]),
        eig_lo=float(values["truth.eig_lo"]),
        eig_hi=float(values["truth.eig_hi"]),
        theta_mean=theta_mean,
        theta0=tuple(values["truth.theta0"]) or None,
        clamp=bool(values["truth.clamp"]),
    )
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None
    return parse_config(text)


def with_overrides(
    cfg: ExperimentConfig,
    seed: int | None = None,
    trials: int | None = None,
    out_dir: str | None = None,
) -> ExperimentConfig:
    """Apply CLI-level overrides and re-validate."""
    updates: dict[str, object] = {}
    if seed is not None:
        updates["seed"] = seed
    if trials is not None:
        updates["trials"] = trials
    if out_dir is not None:
        updates["out_dir"] = out_dir
    if not updates:
        return cfg
    out = replace(cfg, **updates)
    out.validate()
    return out

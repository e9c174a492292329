"""Experiment configuration: defaults, presets, YAML files and command-line overrides.

Precedence is command line > config file (or preset) > DEFAULTS.
"""
import copy
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from multistep_mle.errors import ConfigError
from multistep_mle.estimate import ESTIMATORS, MIN_LEARNING_STEPS, check_delta, make_tau_grid
from multistep_mle.models import DEFAULT_BOUNDS, make_model
from multistep_mle.simulate import n_steps_for

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "MULTISTEP_MLE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

DEFAULTS = {
    "model": {
        "id": "quartic",            # quartic | quartic2d | ou
        "theta_true": [1.0],        # ground truth used to simulate
        "bounds": None,             # {lower: [...], upper: [...]}; None -> per-model default
    },
    "simulation": {
        "T": 1000.0,                # observation horizon
        "h": 0.01,                  # Euler-Maruyama step
        "stationary_init": True,    # X_0 from the invariant law; False -> burn-in from x0_range midpoint
        "x0_range": [-1.0, 1.0],
    },
    "estimator": {
        "method": "one_step",       # preliminary | one_step | second_preliminary | two_step | pathwise_two_step | reference_mle
        "delta": 0.75,              # learning window [0, T^delta]
        "fisher_mode": "quadrature",  # quadrature | empirical
        "tau_grid": {
            "points": 100,          # geometric-then-uniform points from tau_delta to 1
            "values": None,         # explicit grid overrides points
        },
        "mle_grid_points": 41,      # grid search size of the reference MLE
    },
    "montecarlo": {
        "replicates": 300,
        "seed": 20240601,
        "workers": 1,               # >1 runs chunks in a process pool
        "chunk_size": 25,           # replicates simulated together
        "standardize": "true",      # true -> I(theta_0); estimated -> I(theta_hat)
        "max_failure_rate": 0.05,
    },
    "output": {
        "dir": None,                # None -> $MULTISTEP_MLE_OUTPUT_DIR or ./results
        "format": "json",           # json | csv
        "save_samples": False,      # per-replicate standardized errors in the stats JSON
        "save_trajectories": False, # per-replicate trajectories as CSV
    },
}

PRESETS = {
    "paper-example": {
        "model": {"id": "quartic", "theta_true": [1.0], "bounds": {"lower": [0.0], "upper": [2.0]}},
        "simulation": {"T": 1000.0, "h": 0.01},
        "montecarlo": {"replicates": 300},
        "suites": [
            {"estimator": {"method": "one_step", "delta": 0.75}},
            {"estimator": {"method": "two_step", "delta": 0.375}},
        ],
    },
}
PRESETS["quartic-reference"] = PRESETS["paper-example"]


def deep_merge(base, override):
    """Recursively merge `override` into a copy of `base`."""
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config_file(filename):
    path = Path(filename)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a mapping at top level")
    logger.debug("Loaded config file %s with sections %s", path, sorted(data))
    return data


def parse_override(text):
    """'section.key=value' -> nested dict; the value is parsed as YAML."""
    if "=" not in text:
        raise ConfigError(f"override '{text}' must look like section.key=value")
    key, raw = text.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"override '{text}' has an empty key")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value of override '{text}': {exc}") from exc
    nested = value
    for part in reversed(parts):
        nested = {part: nested}
    return nested


def resolve_config(config_file=None, preset=None, overrides=()):
    """Merge defaults, a preset or config file, and overrides (lowest to highest precedence).

    Args:
        config_file (str, optional): YAML file
        preset (str, optional): Name in PRESETS
        overrides (iterable): Nested dicts or 'section.key=value' strings

    Returns:
        dict: Resolved nested configuration (may carry a 'suites' list)
    """
    resolved = copy.deepcopy(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset '{preset}', expected one of {sorted(PRESETS)}")
        resolved = deep_merge(resolved, PRESETS[preset])
    if config_file is not None:
        resolved = deep_merge(resolved, load_config_file(config_file))
    for override in overrides:
        if isinstance(override, str):
            override = parse_override(override)
        resolved = deep_merge(resolved, override)
    return resolved


def expand_suites(resolved):
    """One nested config per suite (the base itself when no suites are listed)."""
    suites = resolved.get("suites") or [{}]
    base = {k: v for k, v in resolved.items() if k != "suites"}
    return [deep_merge(base, suite) for suite in suites]


def output_dir(resolved):
    configured = (resolved.get("output") or {}).get("dir")
    return Path(configured or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


def _floats(values, name):
    try:
        return tuple(float(v) for v in np.atleast_1d(values))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be numeric, got {values!r}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one Monte Carlo experiment."""

    model_id: str
    theta_true: tuple
    lower: tuple
    upper: tuple
    T: float
    h: float
    delta: float
    method: str
    tau_points: int = 100
    tau_values: Optional[tuple] = None
    replicates: int = 300
    seed: int = 0
    fisher_mode: str = "quadrature"
    standardize: str = "true"
    workers: int = 1
    chunk_size: int = 25
    stationary_init: bool = True
    x0_range: tuple = (-1.0, 1.0)
    max_failure_rate: float = 0.05
    mle_grid_points: int = 41
    output_dir: Optional[str] = None
    save_samples: bool = False
    save_trajectories: bool = False

    def __post_init__(self):
        if self.T < 10:
            raise ConfigError(f"horizon T must be at least 10, got {self.T}")
        if not 0 < self.h <= 0.1:
            raise ConfigError(f"step h must lie in (0, 0.1], got {self.h}")
        n_steps_for(self.T, self.h)
        if self.replicates < 1:
            raise ConfigError(f"replicates must be at least 1, got {self.replicates}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.method not in ESTIMATORS:
            raise ConfigError(f"unknown method '{self.method}', expected one of {sorted(ESTIMATORS)}")
        check_delta(self.method, self.delta)
        if self.T ** self.delta / self.h < MIN_LEARNING_STEPS:
            raise ConfigError(
                f"learning window T^delta={self.T ** self.delta:.4g} holds fewer than "
                f"{MIN_LEARNING_STEPS} steps of h={self.h}"
            )
        if self.fisher_mode not in ("quadrature", "empirical"):
            raise ConfigError(f"fisher_mode must be quadrature or empirical, got {self.fisher_mode}")
        if self.standardize not in ("true", "estimated"):
            raise ConfigError(f"standardize must be 'true' or 'estimated', got {self.standardize}")
        if self.tau_values is not None and len(self.tau_values) == 0:
            raise ConfigError("tau grid is empty")
        if self.tau_values is None and self.tau_points < 1:
            raise ConfigError("tau grid is empty")
        if self.workers < 1 or self.chunk_size < 1:
            raise ConfigError("workers and chunk_size must be positive")
        if not 0 <= self.max_failure_rate <= 1:
            raise ConfigError(f"max_failure_rate must lie in [0, 1], got {self.max_failure_rate}")
        model = self.build_model()
        if len(self.theta_true) != model.dim_param:
            raise ConfigError(f"theta_true {list(self.theta_true)} does not match model {self.model_id}")
        if not model.theta_space.contains(self.theta_true):
            raise ConfigError(f"theta_true {list(self.theta_true)} is outside Theta")

    def build_model(self):
        return make_model(self.model_id, {"lower": list(self.lower), "upper": list(self.upper)})

    def tau_grid(self):
        if self.tau_values is not None:
            return np.array(self.tau_values, dtype=float)
        return make_tau_grid(self.T, self.delta, self.tau_points)

    def with_overrides(self, **changes):
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, nested):
        model = nested.get("model", {})
        sim = nested.get("simulation", {})
        est = nested.get("estimator", {})
        mc = nested.get("montecarlo", {})
        out = nested.get("output", {})
        model_id = model.get("id", "quartic")
        if model_id not in DEFAULT_BOUNDS:
            raise ConfigError(f"unknown model '{model_id}', expected one of {sorted(DEFAULT_BOUNDS)}")
        bounds = model.get("bounds") or DEFAULT_BOUNDS[model_id]
        tau = est.get("tau_grid") or {}
        values = tau.get("values")
        try:
            return cls(
                model_id=model_id,
                theta_true=_floats(model.get("theta_true"), "model.theta_true"),
                lower=_floats(bounds["lower"], "model.bounds.lower"),
                upper=_floats(bounds["upper"], "model.bounds.upper"),
                T=float(sim.get("T", 1000.0)),
                h=float(sim.get("h", 0.01)),
                delta=float(est.get("delta", 0.75)),
                method=str(est.get("method", "one_step")),
                tau_points=int(tau.get("points", 100)),
                tau_values=None if values is None else _floats(values, "estimator.tau_grid.values"),
                replicates=int(mc.get("replicates", 300)),
                seed=int(mc.get("seed", 0)),
                fisher_mode=str(est.get("fisher_mode", "quadrature")),
                standardize=str(mc.get("standardize", "true")),
                workers=int(mc.get("workers", 1)),
                chunk_size=int(mc.get("chunk_size", 25)),
                stationary_init=bool(sim.get("stationary_init", True)),
                x0_range=_floats(sim.get("x0_range", [-1.0, 1.0]), "simulation.x0_range"),
                max_failure_rate=float(mc.get("max_failure_rate", 0.05)),
                mle_grid_points=int(est.get("mle_grid_points", 41)),
                output_dir=None if out.get("dir") is None else str(out.get("dir")),
                save_samples=bool(out.get("save_samples", False)),
                save_trajectories=bool(out.get("save_trajectories", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    def to_dict(self):
        return {
            "model": {
                "id": self.model_id,
                "theta_true": list(self.theta_true),
                "bounds": {"lower": list(self.lower), "upper": list(self.upper)},
            },
            "simulation": {
                "T": self.T,
                "h": self.h,
                "stationary_init": self.stationary_init,
                "x0_range": list(self.x0_range),
            },
            "estimator": {
                "method": self.method,
                "delta": self.delta,
                "fisher_mode": self.fisher_mode,
                "tau_grid": {
                    "points": self.tau_points,
                    "values": None if self.tau_values is None else list(self.tau_values),
                },
                "mle_grid_points": self.mle_grid_points,
            },
            "montecarlo": {
                "replicates": self.replicates,
                "seed": self.seed,
                "workers": self.workers,
                "chunk_size": self.chunk_size,
                "standardize": self.standardize,
                "max_failure_rate": self.max_failure_rate,
            },
            "output": {
                "dir": self.output_dir,
                "save_samples": self.save_samples,
                "save_trajectories": self.save_trajectories,
            },
        }

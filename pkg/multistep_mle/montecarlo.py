"""Replicate experiments and the statistics that check the estimator-process limit theorems."""
import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from multistep_mle.config import ExperimentConfig
from multistep_mle.errors import AcceptanceError, ConfigError, ExperimentFailedError, NumericalError, WindowError
from multistep_mle.estimate import run_estimator, score_delta, score_delta_pathwise
from multistep_mle.simulate import (
    euler_maruyama,
    make_generator,
    replicate_seed,
    simulate_paths,
    stationary_draw,
)
from multistep_mle.stationary import fisher_quadrature

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
DEFAULT_TAU_PAIRS = ((0.25, 0.5), (0.75, 1.0))
ACCEPTANCE_TARGETS = ("identity", "finite-horizon", "increments")


@dataclass
class ReplicateOutcome:
    index: int
    seed: int
    estimates: Optional[np.ndarray] = None
    taus: Optional[np.ndarray] = None
    preliminary: Optional[np.ndarray] = None
    clamped: bool = False
    standardizer: Optional[np.ndarray] = None
    wall_clock: float = 0.0
    estimation_time: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self):
        return self.error is None


def _estimate_one(config, model, index, seed, path, simulation_time):
    outcome = ReplicateOutcome(index=index, seed=seed, wall_clock=simulation_time)
    if isinstance(path, Exception):
        outcome.error = f"{type(path).__name__}: {path}"
        return outcome
    start = time.perf_counter()
    try:
        trajectory = run_estimator(config.method, model, path, config.delta, tau_grid=config.tau_grid(),
                                   fisher_mode=config.fisher_mode, mle_grid_points=config.mle_grid_points)
        if config.standardize == "estimated":
            lattice = np.round(trajectory.estimates[-1] / 1e-4) * 1e-4
            outcome.standardizer = fisher_quadrature(model, model.theta_space.clamp(lattice)[0]).sqrt
    except NumericalError as exc:
        outcome.error = f"{type(exc).__name__}: {exc}"
        return outcome
    outcome.estimation_time = time.perf_counter() - start
    outcome.wall_clock += outcome.estimation_time
    outcome.estimates = trajectory.estimates
    outcome.taus = trajectory.tau_grid
    if trajectory.preliminary is not None:
        outcome.preliminary = np.asarray(trajectory.preliminary)
    outcome.clamped = trajectory.clamped
    return outcome


def _run_chunk(config_dict, indices):
    """Simulate and estimate a block of replicates; runs in worker processes."""
    config = ExperimentConfig.from_dict(config_dict)
    model = config.build_model()
    seeds = [replicate_seed(config.seed, i) for i in indices]
    start = time.perf_counter()
    paths = simulate_paths(model, config.theta_true, config.T, config.h, seeds,
                           stationary_init=config.stationary_init, x0_range=config.x0_range)
    simulation_time = (time.perf_counter() - start) / len(indices)
    return [_estimate_one(config, model, i, s, p, simulation_time) for i, s, p in zip(indices, seeds, paths)]


def _chunks(replicates, size):
    return [list(range(start, min(start + size, replicates))) for start in range(0, replicates, size)]


def _collect_outcomes(config, path_factory, progress):
    buffer = {}
    bar = tqdm(total=config.replicates, desc=f"{config.method} M={config.replicates}", disable=not progress)
    if path_factory is not None:
        model = config.build_model()
        for i in range(config.replicates):
            seed = replicate_seed(config.seed, i)
            buffer[i] = _estimate_one(config, model, i, seed, path_factory(i, seed), 0.0)
            bar.update(1)
    elif config.workers > 1:
        config_dict = config.to_dict()
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            futures = {executor.submit(_run_chunk, config_dict, chunk): chunk
                       for chunk in _chunks(config.replicates, config.chunk_size)}
            for future in as_completed(futures):
                for outcome in future.result():
                    buffer[outcome.index] = outcome
                bar.update(len(futures[future]))
    else:
        config_dict = config.to_dict()
        for chunk in _chunks(config.replicates, config.chunk_size):
            for outcome in _run_chunk(config_dict, chunk):
                buffer[outcome.index] = outcome
            bar.update(len(chunk))
    bar.close()
    return [buffer[i] for i in range(config.replicates)]


@dataclass
class ReplicateStats:
    """Aggregated standardized errors z_tau = sqrt(tau T) I^{1/2} (theta(tau) - theta_0).

    Arrays indexed by tau have the tau axis first; `standardized` holds the
    per-replicate samples with shape (successes, n_tau, d).
    """

    config: dict
    tau_grid: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    variance_ratio: np.ndarray
    scaled_variance: np.ndarray
    predicted_cov: np.ndarray
    standardized: np.ndarray
    errors: np.ndarray
    preliminary_mean: np.ndarray
    preliminary_cov: np.ndarray
    sup_errors: np.ndarray
    fisher_true: np.ndarray
    replicates: int
    n_success: int
    failure_count: int
    clamp_rate: float
    wall_clock: float
    estimation_time: float
    failures: list = field(default_factory=list)
    increments: Optional[dict] = None
    indices: list = field(default_factory=list)

    @property
    def method(self):
        return self.config["estimator"]["method"]

    def tau_index(self, tau, tol=0.01):
        i = int(np.argmin(np.abs(self.tau_grid - tau)))
        if abs(self.tau_grid[i] - tau) > tol:
            raise WindowError(f"tau={tau} is not on the experiment grid")
        return i

    def vs_predicted(self):
        """Variance ratios divided by the predicted variances, shape (n_tau, d)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.variance_ratio / np.diagonal(self.predicted_cov, axis1=1, axis2=2)

    def summary_line(self):
        i = len(self.tau_grid) - 1
        est = self.config["estimator"]
        predicted = np.diagonal(self.predicted_cov[i])
        vs_predicted = self.vs_predicted()[i]
        return (f"[{est['method']} delta={est['delta']:g}] M={self.replicates} ok={self.n_success} "
                f"failed={self.failure_count} mean(tau=1)={np.round(self.mean[i], 4).tolist()} "
                f"var_ratio(tau=1)={np.round(self.variance_ratio[i], 4).tolist()} "
                f"predicted={np.round(predicted, 4).tolist()} "
                f"vs_predicted={np.round(vs_predicted, 4).tolist()} "
                f"clamp_rate={self.clamp_rate:.3f} time/replicate={self.wall_clock:.3f}s")

    def to_dict(self, include_samples=False):
        out = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "tau": self.tau_grid.tolist(),
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
            "variance_ratio": self.variance_ratio.tolist(),
            "scaled_variance": self.scaled_variance.tolist(),
            "predicted_cov": self.predicted_cov.tolist(),
            "preliminary_mean": self.preliminary_mean.tolist(),
            "preliminary_cov": self.preliminary_cov.tolist(),
            "fisher_true": self.fisher_true.tolist(),
            "median_sup_error": float(np.median(self.sup_errors)) if self.sup_errors.size else None,
            "replicates": self.replicates,
            "n_success": self.n_success,
            "failure_count": self.failure_count,
            "failures": self.failures,
            "clamp_rate": self.clamp_rate,
            "wall_clock": self.wall_clock,
            "estimation_time": self.estimation_time,
            "increments": self.increments,
        }
        if include_samples:
            out["standardized"] = self.standardized.tolist()
        return out

    def to_frame(self):
        """Per-tau summary table, one row per (tau, component)."""
        rows = []
        vs_predicted = self.vs_predicted()
        for t, tau in enumerate(self.tau_grid):
            for c in range(self.mean.shape[1]):
                rows.append({
                    "tau": tau,
                    "component": c + 1,
                    "mean": self.mean[t, c],
                    "variance_ratio": self.variance_ratio[t, c],
                    "predicted_variance": self.predicted_cov[t, c, c],
                    "variance_ratio_vs_predicted": vs_predicted[t, c],
                    "scaled_variance": self.scaled_variance[t, c],
                })
        return pd.DataFrame(rows)

    def trajectories_frame(self):
        """Long table of successful replicate trajectories: replicate, tau, theta_1..theta_d."""
        theta0 = np.array(self.config["model"]["theta_true"])
        estimates = self.errors + theta0
        n, n_tau, d = estimates.shape
        frame = pd.DataFrame(estimates.reshape(n * n_tau, d), columns=[f"theta_{i + 1}" for i in range(d)])
        frame.insert(0, "tau", np.tile(self.tau_grid, n))
        frame.insert(0, "replicate", np.repeat(np.asarray(self.indices, dtype=int), n_tau))
        return frame


def _sample_cov(samples):
    """Covariance over the first axis of an (M, d) array; zeros when M < 2."""
    d = samples.shape[1]
    if samples.shape[0] < 2:
        return np.zeros((d, d))
    cov = np.atleast_2d(np.cov(samples, rowvar=False, ddof=1))
    return 0.5 * (cov + cov.T)


def finite_horizon_variance(fisher, T, delta, taus, preliminary_cov):
    """Predicted covariance of the one-step standardized error at finite T.

    With c = T^delta / (tau T) the one-step error is approximately
    c (theta_bar - theta_0) + I^{-1} M_tau / (tau T), so
        Cov(z_tau) = tau T c^2 I^{1/2} Cov(theta_bar) I^{1/2} + (1 - c) Id,
    which tends to the identity as T grows.
    """
    taus = np.atleast_1d(taus)
    d = fisher.dim
    c = np.minimum(T ** delta / (taus * T), 1.0)
    spread = fisher.sqrt @ preliminary_cov @ fisher.sqrt
    return (taus * T * c ** 2)[:, None, None] * spread + (1.0 - c)[:, None, None] * np.eye(d)


def aggregate(config, outcomes):
    """Deterministic reduction of replicate outcomes ordered by index."""
    model = config.build_model()
    theta0 = np.array(config.theta_true)
    fisher = fisher_quadrature(model, theta0)
    ok = [o for o in outcomes if o.ok]
    failures = [{"index": o.index, "seed": o.seed, "error": o.error} for o in outcomes if not o.ok]
    for failure in failures:
        logger.warning("Replicate %d (seed %d) excluded: %s", failure["index"], failure["seed"], failure["error"])
    rate = len(failures) / config.replicates
    if not ok or rate > config.max_failure_rate:
        raise ExperimentFailedError(len(failures), config.replicates, config.max_failure_rate)

    taus = ok[0].taus
    d = model.dim_param
    errors = np.stack([o.estimates for o in ok]) - theta0
    scale = np.sqrt(taus * config.T)[None, :, None]
    if config.standardize == "estimated":
        standardized = np.stack([(o.estimates - theta0) @ o.standardizer.T for o in ok]) * scale
    else:
        standardized = (errors @ fisher.sqrt.T) * scale

    cov = np.stack([_sample_cov(standardized[:, t, :]) for t in range(len(taus))])
    scaled = np.sqrt(config.T) * errors
    scaled_variance = np.stack([np.diagonal(_sample_cov(scaled[:, t, :])) for t in range(len(taus))])
    if all(o.preliminary is not None for o in ok):
        preliminary = np.stack([o.preliminary for o in ok])
        preliminary_mean, preliminary_cov = preliminary.mean(axis=0), _sample_cov(preliminary)
    else:
        preliminary_mean, preliminary_cov = np.full(d, np.nan), np.full((d, d), np.nan)
    if config.method == "one_step":
        predicted = finite_horizon_variance(fisher, config.T, config.delta, taus, preliminary_cov)
    else:
        predicted = np.tile(np.eye(d), (len(taus), 1, 1))

    late = taus >= 0.1 - 1e-12
    sup_errors = np.max(np.abs(errors[:, late, :]), axis=(1, 2)) if np.any(late) else np.array([])

    stats = ReplicateStats(
        config=config.to_dict(),
        tau_grid=taus,
        mean=standardized.mean(axis=0),
        cov=cov,
        variance_ratio=np.diagonal(cov, axis1=1, axis2=2).copy(),
        scaled_variance=scaled_variance,
        predicted_cov=predicted,
        standardized=standardized,
        errors=errors,
        preliminary_mean=preliminary_mean,
        preliminary_cov=preliminary_cov,
        sup_errors=sup_errors,
        fisher_true=fisher.mat,
        replicates=config.replicates,
        n_success=len(ok),
        failure_count=len(failures),
        clamp_rate=float(np.mean([o.clamped for o in ok])),
        wall_clock=float(np.mean([o.wall_clock for o in ok])),
        estimation_time=float(np.mean([o.estimation_time for o in ok])),
        failures=failures,
        indices=[o.index for o in ok],
    )
    if len(ok) >= 3 and all(_on_grid(taus, t) for pair in DEFAULT_TAU_PAIRS for t in pair):
        stats.increments = wiener_increment_check(stats, DEFAULT_TAU_PAIRS, min_replicates=3).to_dict()
    return stats


def _on_grid(taus, tau, tol=0.01):
    return bool(np.min(np.abs(taus - tau)) <= tol)


def run_experiment(config, path_factory=None, progress=True):
    """Run all replicates of `config` and aggregate their standardized errors.

    Args:
        config (ExperimentConfig): Experiment description
        path_factory (callable, optional): (index, seed) -> SamplePath, replaces simulation
        progress (bool): Show a tqdm progress bar

    Returns:
        ReplicateStats: Aggregated statistics
    """
    logger.info("Running %s on %s: M=%d, T=%g, h=%g, delta=%g", config.method, config.model_id,
                config.replicates, config.T, config.h, config.delta)
    start = time.perf_counter()
    outcomes = _collect_outcomes(config, path_factory, progress)
    stats = aggregate(config, outcomes)
    logger.info("Finished %s in %.1fs (%d failures)", config.method, time.perf_counter() - start,
                stats.failure_count)
    return stats


@dataclass
class IncrementReport:
    pairs: tuple
    correlation: np.ndarray
    variance_ratio: np.ndarray
    corr_limit: float
    variance_bounds: tuple

    @property
    def passed(self):
        lo, hi = self.variance_bounds
        return bool(np.all(np.abs(self.correlation) < self.corr_limit)
                    and np.all((self.variance_ratio >= lo) & (self.variance_ratio <= hi)))

    def to_dict(self):
        return {
            "pairs": [list(p) for p in self.pairs],
            "correlation": self.correlation.tolist(),
            "variance_ratio": self.variance_ratio.tolist(),
            "passed": self.passed,
        }


def wiener_increment_check(stats, tau_pairs=DEFAULT_TAU_PAIRS, corr_limit=0.15, variance_bounds=(0.7, 1.3),
                           min_replicates=100):
    """Independent-increment and variance checks of eta_tau = tau sqrt(T) I^{1/2} (theta(tau) - theta_0).

    Args:
        stats (ReplicateStats): Experiment statistics
        tau_pairs (tuple): Two disjoint intervals ((tau1, tau2), (tau3, tau4))
        corr_limit (float): Bound on |correlation| of the two increments
        variance_bounds (tuple): Bounds on Var(increment) / (tau2 - tau1)
        min_replicates (int): Smallest usable number of successful replicates

    Returns:
        IncrementReport: Per-component correlations and variance ratios
    """
    pairs = tuple(tuple(float(t) for t in pair) for pair in tau_pairs)
    if len(pairs) != 2 or any(len(p) != 2 for p in pairs):
        raise WindowError("wiener_increment_check needs exactly two (tau1, tau2) intervals")
    for a, b in pairs:
        if not a < b:
            raise WindowError(f"interval ({a}, {b}) is degenerate or reversed")
    (a1, b1), (a2, b2) = sorted(pairs)
    if a2 < b1:
        raise WindowError(f"intervals {pairs[0]} and {pairs[1]} overlap")
    if stats.n_success < min_replicates:
        raise ValueError(f"need at least {min_replicates} replicates, have {stats.n_success}")

    taus = stats.tau_grid
    eta = np.sqrt(taus)[None, :, None] * stats.standardized
    increments, ratios = [], []
    for a, b in pairs:
        i, j = stats.tau_index(a), stats.tau_index(b)
        inc = eta[:, j, :] - eta[:, i, :]
        increments.append(inc)
        ratios.append(np.var(inc, axis=0, ddof=1) / (taus[j] - taus[i]))
    d = increments[0].shape[1]
    correlation = np.array([np.corrcoef(increments[0][:, c], increments[1][:, c])[0, 1] for c in range(d)])
    return IncrementReport(pairs=pairs, correlation=correlation, variance_ratio=np.array(ratios),
                           corr_limit=corr_limit, variance_bounds=tuple(variance_bounds))


@dataclass
class CheckResult:
    name: str
    value: float
    target: str
    passed: bool


def _interval_checks(stats, t, tau, target, label, mean_limit, variance_bounds):
    lo, hi = variance_bounds
    results = []
    for c in range(stats.mean.shape[1]):
        limit = mean_limit * np.sqrt(target[c])
        mean = float(stats.mean[t, c])
        results.append(CheckResult(f"mean tau={tau:g} component={c + 1} vs {label}", mean,
                                   f"|x| < {limit:.4g}", abs(mean) < limit))
        ratio = float(stats.variance_ratio[t, c] / target[c])
        results.append(CheckResult(f"variance tau={tau:g} component={c + 1} vs {label}", ratio,
                                   f"[{lo:g}, {hi:g}]", lo <= ratio <= hi))
    return results


def acceptance_checks(stats, taus=(0.25, 0.5, 1.0), mean_limit=0.15, variance_bounds=(0.8, 1.2),
                      min_wiener_replicates=100, targets=ACCEPTANCE_TARGETS):
    """Interval checks on standardized errors, plus the Wiener-increment checks.

    Each tau is checked against the identity covariance and, when the
    experiment carries one, against the finite-horizon prediction of
    `finite_horizon_variance`. Mean limits scale with the target standard
    deviation.

    Args:
        stats (ReplicateStats): Experiment statistics
        taus (tuple): Checked tau values (skipped when not on the grid)
        mean_limit (float): Bound on |mean| for a unit target
        variance_bounds (tuple): Bounds on variance / target
        min_wiener_replicates (int): Increment checks need this many successes
        targets (tuple): Subset of ACCEPTANCE_TARGETS; "increments" adds the Wiener-increment checks

    Returns:
        list: CheckResult per check
    """
    unknown = set(targets) - set(ACCEPTANCE_TARGETS)
    if unknown:
        raise ConfigError(f"unknown acceptance targets {sorted(unknown)}, expected {ACCEPTANCE_TARGETS}")
    results = []
    d = stats.mean.shape[1]
    for tau in taus:
        if not _on_grid(stats.tau_grid, tau):
            continue
        t = stats.tau_index(tau)
        if "identity" in targets:
            results.extend(_interval_checks(stats, t, tau, np.ones(d), "identity", mean_limit, variance_bounds))
        predicted = stats.predicted_cov[t]
        if "finite-horizon" in targets and not np.allclose(predicted, np.eye(d)):
            results.extend(_interval_checks(stats, t, tau, np.diagonal(predicted), "finite-horizon",
                                            mean_limit, variance_bounds))
    pairs_on_grid = all(_on_grid(stats.tau_grid, t) for p in DEFAULT_TAU_PAIRS for t in p)
    if "increments" in targets and stats.n_success >= min_wiener_replicates and pairs_on_grid:
        report = wiener_increment_check(stats, DEFAULT_TAU_PAIRS)
        lo, hi = report.variance_bounds
        for c, corr in enumerate(report.correlation):
            results.append(CheckResult(f"increment correlation component={c + 1}", float(corr),
                                       f"|x| < {report.corr_limit:g}", abs(corr) < report.corr_limit))
        for p, pair in enumerate(report.pairs):
            for c, ratio in enumerate(report.variance_ratio[p]):
                results.append(CheckResult(f"increment variance {pair} component={c + 1}", float(ratio),
                                           f"[{lo:g}, {hi:g}]", lo <= ratio <= hi))
    return results


def gate(stats, **kwargs):
    """Raise AcceptanceError if any acceptance check fails."""
    results = acceptance_checks(stats, **kwargs)
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise AcceptanceError(failed)
    return results


def _base_key(config):
    return (config.model_id, tuple(config.theta_true), config.T, config.h)


def efficiency_report(configs, stats=None, progress=False):
    """Compare estimator methods run on the same model, parameter, horizon and step.

    Args:
        configs (list): ExperimentConfig per method (at least two)
        stats (list, optional): Precomputed ReplicateStats matching configs
        progress (bool): Progress bars for experiments run here

    Returns:
        pd.DataFrame: One row per config with second moments at tau=1 and costs
    """
    configs = list(configs)
    if len(configs) < 2:
        raise ConfigError("efficiency_report needs at least two experiment configs")
    bases = {_base_key(c) for c in configs}
    if len(bases) != 1:
        raise ConfigError(f"configs do not share model, theta_true, T and h: {sorted(bases)}")
    if stats is None:
        stats = [run_experiment(c, progress=progress) for c in configs]
    if len(stats) != len(configs):
        raise ConfigError("stats must match configs one to one")

    rows = []
    for config, st in zip(configs, stats):
        t = st.tau_index(1.0)
        z = st.standardized[:, t, :]
        rows.append({
            "method": config.method,
            "delta": config.delta,
            "replicates": st.n_success,
            "second_moment": float(np.mean(np.sum(z * z, axis=1))),
            "normalized_second_moment": float(np.mean(np.sum(z * z, axis=1)) / z.shape[1]),
            "variance_ratio": float(np.mean(st.variance_ratio[t])),
            "predicted_variance": float(np.mean(np.diagonal(st.predicted_cov[t]))),
            "mean_wall_clock": st.wall_clock,
            "mean_estimation_time": st.estimation_time,
        })
    table = pd.DataFrame(rows)
    reference = table.loc[table["method"] == "reference_mle", "mean_estimation_time"]
    if len(reference):
        table["cost_ratio_vs_reference"] = table["mean_estimation_time"] / float(reference.iloc[0])
        one_step = table.loc[table["method"] == "one_step", "cost_ratio_vs_reference"]
        if len(one_step):
            logger.info("One-step vs reference MLE cost ratio: %.4f", float(one_step.iloc[0]))
    else:
        table["cost_ratio_vs_reference"] = np.nan
    return table


def consistency_trend(config, horizons=(500.0, 2000.0), progress=False):
    """Median over replicates of sup_{tau >= 0.1} |theta(tau) - theta_0| for each horizon."""
    rows = []
    for T in horizons:
        stats = run_experiment(replace(config, T=float(T)), progress=progress)
        rows.append({"T": float(T), "median_sup_error": float(np.median(stats.sup_errors)),
                     "n_success": stats.n_success})
    return pd.DataFrame(rows)


def score_equivalence_check(model, theta, T=40.0, h_levels=(0.01, 0.005, 0.0025), paths=40, delta=0.75,
                            tau=1.0, seed=0):
    """RMS gap between the pathwise and Ito scores under step refinement.

    All levels of one path share the Brownian increments of the finest level,
    aggregated to the coarser steps.

    Returns:
        pd.DataFrame: Columns h, rms_gap, contraction (previous level's gap / this gap)
    """
    theta = model.check_theta(theta)
    h_levels = sorted((float(h) for h in h_levels), reverse=True)
    finest = h_levels[-1]
    factors = [int(round(h / finest)) for h in h_levels]
    if any(abs(f * finest - h) > 1e-12 * h for f, h in zip(factors, h_levels)):
        raise ConfigError(f"step levels {h_levels} must be integer multiples of the finest step")
    n_fine = int(round(T / finest))
    gaps = np.zeros((paths, len(h_levels), model.dim_param))
    for p in range(paths):
        path_seed = replicate_seed(seed, p)
        x0 = stationary_draw(model, theta, path_seed)
        fine = make_generator(path_seed).standard_normal(n_fine)
        for level, (h, factor) in enumerate(zip(h_levels, factors)):
            noise = fine.reshape(-1, factor).sum(axis=1) / np.sqrt(factor)
            path = euler_maruyama(model, theta, x0, T, h, path_seed, noise=noise)
            ito = score_delta(model, theta, path, delta, tau).value
            pathwise = score_delta_pathwise(model, theta, path, delta, tau).value
            gaps[p, level] = pathwise - ito
    rms = np.sqrt(np.mean(np.sum(gaps ** 2, axis=2), axis=0))
    contraction = np.concatenate([[np.nan], rms[:-1] / rms[1:]])
    return pd.DataFrame({"h": h_levels, "rms_gap": rms, "contraction": contraction})

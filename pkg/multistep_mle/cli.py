"""Command-line front end.

    python -m multistep_mle fisher --model quartic --theta 1.0
    python -m multistep_mle estimate --model ou --theta 1.0 --T 1000 --h 0.01 --delta 0.75 --method one_step --seed 7
    python -m multistep_mle montecarlo --preset paper-example --gate

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 acceptance failure in --gate mode.
"""
import argparse
import json
import logging
import math
import struct
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from multistep_mle.config import (
    DEFAULTS,
    OUTPUT_DIR_ENV,
    PRESETS,
    ExperimentConfig,
    expand_suites,
    output_dir,
    resolve_config,
)
from multistep_mle.errors import AcceptanceError, ConfigError, NumericalError
from multistep_mle.estimate import make_tau_grid, run_estimator
from multistep_mle.montecarlo import SCHEMA_VERSION, acceptance_checks, efficiency_report, run_experiment
from multistep_mle.simulate import SamplePath, simulate_path
from multistep_mle.stationary import fisher_quadrature

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_ACCEPTANCE = 3


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the configuration-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def dumps(payload):
    """JSON text; floats use the shortest repr that round-trips (at most 17 significant digits)."""
    return json.dumps(_jsonable(payload), indent=2, allow_nan=False)


class TableResult:
    def __init__(self, frame, name="table"):
        self.frame = frame
        self.name = name

    def to_frame(self):
        return self.frame

    def to_dict(self):
        return {self.name: self.frame.to_dict(orient="records")}


class _PathResult:
    def __init__(self, path):
        self.path = path

    def to_frame(self):
        return self.path.to_frame()

    def to_dict(self):
        p = self.path
        return {"h": p.h, "seed": p.seed, "theta_true": list(p.theta_true or ()), "t": p.times, "x": p.values}


class _StatsResult:
    def __init__(self, stats, include_samples, checks=()):
        self.stats = stats
        self.include_samples = include_samples
        self.checks = [asdict(check) for check in checks]

    def to_frame(self):
        return self.stats.to_frame()

    def to_dict(self):
        out = self.stats.to_dict(include_samples=self.include_samples)
        out["acceptance"] = self.checks
        return out

    def metadata(self):
        summary = self.stats.to_dict()
        out = {k: summary[k] for k in ("replicates", "n_success", "failure_count", "failures",
                                       "clamp_rate", "wall_clock", "estimation_time", "increments",
                                       "fisher_true", "median_sup_error")}
        out["acceptance"] = self.checks
        return out


def emit_outputs(results, fmt, directory, stem, config):
    """Write results as CSV (plus a JSON sidecar with config) or as a single JSON document.

    Args:
        results: Object with to_frame() and to_dict()
        fmt (str): "csv" or "json"
        directory (Path): Output directory, created when missing
        stem (str): File name without extension
        config (dict): Resolved configuration embedded in every output

    Returns:
        list: Paths written
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output format must be csv or json, got {fmt}")
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        meta = {"schema_version": SCHEMA_VERSION, "config": config}
        if fmt == "csv":
            csv_path = directory / f"{stem}.csv"
            results.to_frame().to_csv(csv_path, index=False, float_format="%.17g")
            sidecar = directory / f"{stem}.json"
            if hasattr(results, "metadata"):
                meta["metadata"] = results.metadata()
            sidecar.write_text(dumps(meta))
            written += [csv_path, sidecar]
        else:
            json_path = directory / f"{stem}.json"
            json_path.write_text(dumps({**meta, **results.to_dict()}))
            written.append(json_path)
    except OSError as exc:
        raise ConfigError(f"cannot write outputs to {directory}: {exc}") from exc
    for path in written:
        logger.info("Wrote %s", path)
    return written


def _shortcut_overrides(args):
    overrides = []
    mapping = [
        ("model", ("model", "id")),
        ("theta", ("model", "theta_true")),
        ("T", ("simulation", "T")),
        ("h", ("simulation", "h")),
        ("delta", ("estimator", "delta")),
        ("method", ("estimator", "method")),
        ("fisher_mode", ("estimator", "fisher_mode")),
        ("tau_points", ("estimator", "tau_grid", "points")),
        ("tau", ("estimator", "tau_grid", "values")),
        ("seed", ("montecarlo", "seed")),
        ("replicates", ("montecarlo", "replicates")),
        ("workers", ("montecarlo", "workers")),
        ("output_dir", ("output", "dir")),
        ("format", ("output", "format")),
    ]
    for attr, keys in mapping:
        value = getattr(args, attr, None)
        if value is None:
            continue
        nested = value
        for key in reversed(keys):
            nested = {key: nested}
        overrides.append(nested)
    if getattr(args, "lower", None) is not None or getattr(args, "upper", None) is not None:
        if args.lower is None or args.upper is None:
            raise ConfigError("--lower and --upper must be given together")
        overrides.append({"model": {"bounds": {"lower": args.lower, "upper": args.upper}}})
    return overrides


def resolve_from_args(args):
    """Defaults < preset/config file < --set overrides < explicit flags."""
    overrides = list(args.set or []) + _shortcut_overrides(args)
    return resolve_config(args.config, args.preset, overrides)


def _experiment(resolved):
    return ExperimentConfig.from_dict(resolved)


def cmd_fisher(args):
    resolved = resolve_from_args(args)
    config = _experiment(resolved)
    model = config.build_model()
    fisher = fisher_quadrature(model, config.theta_true)
    print(dumps({"schema_version": SCHEMA_VERSION, "config": config.to_dict(), **fisher.to_dict()}))
    return EXIT_OK


def cmd_simulate(args):
    resolved = resolve_from_args(args)
    config = _experiment(resolved)
    model = config.build_model()
    path = simulate_path(model, config.theta_true, config.T, config.h, config.seed,
                         stationary_init=config.stationary_init, x0_range=config.x0_range)
    directory = output_dir(resolved)
    stem = f"path_{config.model_id}_seed{config.seed}"
    emit_outputs(_PathResult(path), resolved["output"]["format"], directory, stem, config.to_dict())
    try:
        path.to_binary(Path(directory) / f"{stem}.bin")
    except OSError as exc:
        raise ConfigError(f"cannot write outputs to {directory}: {exc}") from exc
    return EXIT_OK


def _load_path(filename):
    filename = Path(filename)
    if not filename.is_file():
        raise ConfigError(f"path file not found: {filename}")
    try:
        if filename.suffix == ".bin":
            return SamplePath.from_binary(filename)
        return SamplePath.from_csv(filename)
    except (ValueError, KeyError, struct.error) as exc:
        raise ConfigError(f"cannot read sample path {filename}: {exc}") from exc


def cmd_estimate(args):
    resolved = resolve_from_args(args)
    config = _experiment(resolved)
    model = config.build_model()
    if args.path:
        path = _load_path(args.path)
        # the grid follows the observed horizon, not the configured one
        tau_grid = (np.array(config.tau_values) if config.tau_values is not None
                    else make_tau_grid(path.horizon, config.delta, config.tau_points))
    else:
        path = simulate_path(model, config.theta_true, config.T, config.h, config.seed,
                             stationary_init=config.stationary_init, x0_range=config.x0_range)
        tau_grid = config.tau_grid()
    trajectory = run_estimator(config.method, model, path, config.delta, tau_grid=tau_grid,
                               fisher_mode=config.fisher_mode, mle_grid_points=config.mle_grid_points)
    stem = f"trajectory_{config.model_id}_{config.method}_seed{config.seed}"
    emit_outputs(trajectory, resolved["output"]["format"], output_dir(resolved), stem, config.to_dict())
    return EXIT_OK


def _suite_configs(resolved):
    return [ExperimentConfig.from_dict(suite) for suite in expand_suites(resolved)]


def _suite_stem(prefix, config, i):
    return f"{prefix}_{i:02d}_{config.model_id}_{config.method}_d{config.delta:g}"


def cmd_montecarlo(args):
    resolved = resolve_from_args(args)
    configs = _suite_configs(resolved)
    directory = output_dir(resolved)
    fmt = resolved["output"]["format"]
    failed = []
    for i, config in enumerate(configs):
        stats = run_experiment(config, progress=not args.quiet)
        print(stats.summary_line())
        checks = acceptance_checks(stats)
        emit_outputs(_StatsResult(stats, config.save_samples, checks), fmt, directory,
                     _suite_stem("stats", config, i), config.to_dict())
        if config.save_trajectories:
            emit_outputs(TableResult(stats.trajectories_frame(), "trajectories"), "csv", directory,
                         _suite_stem("trajectories", config, i), config.to_dict())
        for check in checks:
            logger.info("%s %s: %s=%.4g (target %s)", "pass" if check.passed else "FAIL", config.method,
                        check.name, check.value, check.target)
        if args.gate:
            failed.extend(f"{config.method}: {check.name}={check.value:.4g} (target {check.target})"
                          for check in checks if not check.passed)
    if failed:
        for line in failed:
            print(f"FAILED {line}", file=sys.stderr)
        raise AcceptanceError(failed)
    return EXIT_OK


def cmd_compare(args):
    resolved = resolve_from_args(args)
    configs = _suite_configs(resolved)
    stats = []
    for config in configs:
        st = run_experiment(config, progress=not args.quiet)
        print(st.summary_line())
        stats.append(st)
    table = efficiency_report(configs, stats=stats)
    print(table.to_string(index=False))
    emit_outputs(TableResult(table, "methods"), resolved["output"]["format"], output_dir(resolved),
                 f"compare_{configs[0].model_id}", {"suites": [c.to_dict() for c in configs]})
    return EXIT_OK


def _add_common(parser):
    defaults = DEFAULTS
    parser.add_argument("--config", help="YAML config file (nested sections model/simulation/estimator/montecarlo/output)")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="Named preset merged before --config")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="Override, e.g. --set estimator.delta=0.6 (repeatable)")
    parser.add_argument("--model", help=f"Model id: quartic, quartic2d, ou (default {defaults['model']['id']})")
    parser.add_argument("--theta", type=float, nargs="+", help="True parameter (default 1.0)")
    parser.add_argument("--lower", type=float, nargs="+", help="Lower bounds of Theta")
    parser.add_argument("--upper", type=float, nargs="+", help="Upper bounds of Theta")
    parser.add_argument("--T", type=float, help=f"Horizon (default {defaults['simulation']['T']:g})")
    parser.add_argument("--h", type=float, help=f"Step (default {defaults['simulation']['h']:g})")
    parser.add_argument("--delta", type=float, help=f"Learning exponent (default {defaults['estimator']['delta']:g})")
    parser.add_argument("--method", help=f"Estimator (default {defaults['estimator']['method']})")
    parser.add_argument("--fisher-mode", dest="fisher_mode", choices=["quadrature", "empirical"],
                        help="Fisher information source (default quadrature)")
    parser.add_argument("--tau-points", dest="tau_points", type=int, help="Tau grid size (default 100)")
    parser.add_argument("--tau", type=float, nargs="+", help="Explicit tau grid")
    parser.add_argument("--seed", type=int, help=f"Seed (default {defaults['montecarlo']['seed']})")
    parser.add_argument("--replicates", type=int, help=f"Monte Carlo replicates (default {defaults['montecarlo']['replicates']})")
    parser.add_argument("--workers", type=int, help="Worker processes (default 1)")
    parser.add_argument("--output-dir", dest="output_dir", help=f"Output directory (default ${OUTPUT_DIR_ENV} or ./results)")
    parser.add_argument("--format", choices=["csv", "json"], help="Output format (default json)")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    parser.add_argument("--quiet", action="store_true", help="Hide progress bars")


def build_parser():
    parser = _Parser(prog="multistep_mle", description="Multi-step MLE estimator-processes for ergodic diffusions")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "simulate": (cmd_simulate, "Simulate one path and write CSV, binary and metadata"),
        "fisher": (cmd_fisher, "Print the quadrature Fisher information as JSON"),
        "estimate": (cmd_estimate, "Compute one estimator trajectory"),
        "montecarlo": (cmd_montecarlo, "Run replicate experiments and write statistics"),
        "compare": (cmd_compare, "Run several suites and write an efficiency table"),
    }
    for name, (handler, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_common(p)
        p.set_defaults(handler=handler)
        if name == "estimate":
            p.add_argument("--path", help="Observed path (.csv with t,x columns or .bin record) instead of simulating")
        if name == "montecarlo":
            p.add_argument("--gate", action="store_true", help="Exit 3 when acceptance checks fail")
    return parser


def parse_and_dispatch(argv=None):
    """Parse arguments, run the subcommand and map errors to exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except AcceptanceError as exc:
        print(f"acceptance failure: {exc}", file=sys.stderr)
        return EXIT_ACCEPTANCE


def main():
    sys.exit(parse_and_dispatch())

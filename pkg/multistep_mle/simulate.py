import logging
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from multistep_mle.errors import ConfigError, SimulationDivergedError
from multistep_mle.stationary import build_density

logger = logging.getLogger(__name__)

DIVERGENCE_BOUND = 1e6
MIN_BURN_IN = 10_000
_MASK64 = (1 << 64) - 1

# Philox streams derived from one seed
STREAM_INCREMENTS = 0
STREAM_INITIAL = 1
STREAM_BURN_IN = 2

_BINARY_MAGIC = b"MSMLEPTH"
_BINARY_HEADER = struct.Struct("<8sdQqQ")


def make_generator(seed, stream=STREAM_INCREMENTS):
    """Counter-based generator keyed by (seed, stream)."""
    key = (int(stream) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def replicate_seed(seed, index):
    return int(seed) ^ int(index)


def n_steps_for(T, h):
    if not h > 0:
        raise ConfigError(f"step h must be positive, got {h}")
    if not T >= h:
        raise ConfigError(f"horizon T={T} must be at least one step h={h}")
    n = int(round(T / h))
    if abs(n * h - T) > 1e-12 * T:
        raise ConfigError(f"horizon T={T} is not an integer multiple of h={h}")
    return n


@dataclass(frozen=True)
class SamplePath:
    """Observations X_0, ..., X_N of one trajectory on the grid t0 + j*h."""

    h: float
    values: np.ndarray
    t0: float = 0.0
    theta_true: Optional[tuple] = None
    seed: Optional[int] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) < 2:
            raise ValueError("a sample path needs at least two observations")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample path values must be finite")
        object.__setattr__(self, "values", values)
        if self.theta_true is not None:
            object.__setattr__(self, "theta_true", tuple(float(v) for v in np.atleast_1d(self.theta_true)))

    @property
    def n_steps(self):
        return len(self.values) - 1

    @property
    def horizon(self):
        return self.h * self.n_steps

    @property
    def times(self):
        return self.t0 + self.h * np.arange(len(self.values))

    @property
    def increments(self):
        return np.diff(self.values)

    def index_at(self, t):
        return int(round((t - self.t0) / self.h))

    def to_frame(self):
        return pd.DataFrame({"t": self.times, "x": self.values})

    def to_csv(self, filename):
        self.to_frame().to_csv(filename, index=False, float_format="%.17g")

    @classmethod
    def from_csv(cls, filename, seed=None, theta_true=None):
        df = pd.read_csv(filename, float_precision="round_trip")
        if list(df.columns[:2]) != ["t", "x"]:
            raise ValueError(f"{filename}: expected columns t, x")
        t = df["t"].to_numpy()
        return cls(h=float(t[1] - t[0]), values=df["x"].to_numpy(), t0=float(t[0]),
                   theta_true=theta_true, seed=seed)

    def to_binary(self, filename):
        theta = np.asarray(self.theta_true if self.theta_true is not None else [], dtype="<f8")
        seed = -1 if self.seed is None else int(self.seed)
        with open(filename, "wb") as fh:
            fh.write(_BINARY_HEADER.pack(_BINARY_MAGIC, float(self.h), self.n_steps, seed, len(theta)))
            fh.write(theta.tobytes())
            fh.write(np.asarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, filename):
        with open(filename, "rb") as fh:
            raw = fh.read()
        magic, h, n, seed, d = _BINARY_HEADER.unpack_from(raw, 0)
        if magic != _BINARY_MAGIC:
            raise ValueError(f"{filename} is not a sample path record")
        offset = _BINARY_HEADER.size
        theta = np.frombuffer(raw, dtype="<f8", count=d, offset=offset)
        values = np.frombuffer(raw, dtype="<f8", count=n + 1, offset=offset + 8 * d)
        return cls(h=h, values=values.astype(float), theta_true=tuple(theta) if d else None,
                   seed=None if seed < 0 else seed)


def _euler_core(model, theta, x0, h, noise):
    """Euler-Maruyama recursion for M paths at once.

    Args:
        model (DiffusionModel): Diffusion model
        theta (np.ndarray): Parameter
        x0 (np.ndarray): Initial states, shape (M,)
        h (float): Step
        noise (np.ndarray): Standard normals, shape (N, M)

    Returns:
        tuple: (values of shape (M, N+1), first diverged step per path or -1)
    """
    n, m = noise.shape
    out = np.empty((n + 1, m))
    x = np.array(x0, dtype=float)
    out[0] = x
    sqrt_h = np.sqrt(h)
    diverged_at = np.full(m, -1)
    for j in range(n):
        x = x + model.drift(theta, x) * h + model.sigma(x) * sqrt_h * noise[j]
        bad = ~(np.abs(x) <= DIVERGENCE_BOUND)
        if bad.any():
            fresh = bad & (diverged_at < 0)
            diverged_at[fresh] = j + 1
            x = np.where(bad, 0.0, x)
        out[j + 1] = x
    return out.T, diverged_at


def euler_maruyama(model, theta, x0, T, h, seed, noise=None):
    """Simulate one path from x0 with the Euler-Maruyama scheme.

    Args:
        model (DiffusionModel): Diffusion model
        theta (array-like): Parameter in Theta
        x0 (float): Initial state
        T (float): Horizon
        h (float): Step
        seed (int): Seed of the increment stream
        noise (array-like, optional): Forced standard normals Z_0..Z_{N-1}

    Returns:
        SamplePath: The path
    """
    theta = model.check_theta(theta)
    n = n_steps_for(T, h)
    if noise is None:
        noise = make_generator(seed, STREAM_INCREMENTS).standard_normal(n)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (n,):
        raise ConfigError(f"forced noise must have {n} entries, got {noise.shape}")
    values, diverged_at = _euler_core(model, theta, np.array([x0], dtype=float), h, noise[:, None])
    if diverged_at[0] >= 0:
        raise SimulationDivergedError(diverged_at[0])
    return SamplePath(h=h, values=values[0], theta_true=tuple(theta), seed=seed)


def noise_free_path(model, theta, x0, T, h):
    """Deterministic path X_{j+1} = X_j + S(theta, X_j) h."""
    return euler_maruyama(model, theta, x0, T, h, seed=0, noise=np.zeros(n_steps_for(T, h)))


def stationary_sample(model, theta, size, seed):
    """Draws from the invariant law by inverse CDF on the tabulated density."""
    table = build_density(model, theta)
    uniforms = make_generator(seed, STREAM_INITIAL).random(size)
    return table.sample(uniforms)


def stationary_draw(model, theta, seed):
    return float(stationary_sample(model, theta, 1, seed)[0])


def burn_in_steps(h):
    return max(int(np.ceil(10.0 / h)), MIN_BURN_IN)


def _initial_states(model, theta, h, seeds, stationary_init, x0, x0_range):
    if x0 is not None:
        return np.full(len(seeds), float(x0))
    if stationary_init:
        table = build_density(model, theta)
        uniforms = np.array([make_generator(s, STREAM_INITIAL).random() for s in seeds])
        return table.sample(uniforms)
    start = 0.5 * (x0_range[0] + x0_range[1])
    n_burn = burn_in_steps(h)
    noise = np.stack([make_generator(s, STREAM_BURN_IN).standard_normal(n_burn) for s in seeds], axis=1)
    warm, diverged_at = _euler_core(model, theta, np.full(len(seeds), start), h, noise)
    starts = warm[:, -1].copy()
    failed = diverged_at >= 0
    if np.any(failed):
        logger.warning("Burn-in diverged for %d paths", int(np.sum(failed)))
        # a reset state is not a draw from the burned-in law
        starts[failed] = np.nan
    return starts


def simulate_paths(model, theta, T, h, seeds, stationary_init=True, x0=None, x0_range=(-1.0, 1.0)):
    """Simulate one path per seed with the recursion vectorized across paths.

    Each path depends only on its own seed, so the output does not depend on
    how seeds are grouped into calls.

    Returns:
        list: SamplePath per seed, or the SimulationDivergedError raised for that seed
    """
    theta = model.check_theta(theta)
    n = n_steps_for(T, h)
    seeds = [int(s) for s in seeds]
    starts = _initial_states(model, theta, h, seeds, stationary_init, x0, x0_range)
    noise = np.stack([make_generator(s, STREAM_INCREMENTS).standard_normal(n) for s in seeds], axis=1)
    values, diverged_at = _euler_core(model, theta, starts, h, noise)
    del noise
    paths = []
    for i, s in enumerate(seeds):
        if diverged_at[i] >= 0 or not np.isfinite(starts[i]):
            paths.append(SimulationDivergedError(max(diverged_at[i], 0)))
        else:
            paths.append(SamplePath(h=h, values=values[i].copy(), theta_true=tuple(theta), seed=s))
    return paths


def simulate_path(model, theta, T, h, seed, stationary_init=True, x0=None, x0_range=(-1.0, 1.0)):
    """Simulate a path started from the invariant law (or after a burn-in).

    Raises:
        SimulationDivergedError: If the state leaves |x| <= 1e6
    """
    path = simulate_paths(model, theta, T, h, [seed], stationary_init, x0, x0_range)[0]
    if isinstance(path, SimulationDivergedError):
        raise path
    return path

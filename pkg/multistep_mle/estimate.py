"""Preliminary estimators, score processes and the multi-step MLE estimator-processes.

Stochastic integrals are left-point (Ito) sums over the observation grid:
    int F(X_t) dX_t  ->  sum_j F(X_j) (X_{j+1} - X_j).
The post-learning window starts at the first grid index j_delta with
j_delta * h >= T^delta, and tau maps to index k = ceil(tau * N).
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy import integrate, special

from multistep_mle.errors import (
    ConfigError,
    DegeneratePreliminaryError,
    InsufficientDataError,
    WindowError,
)
from multistep_mle.stationary import empirical_fisher, fisher_quadrature

logger = logging.getLogger(__name__)

MIN_LEARNING_STEPS = 10
FISHER_LATTICE = 1e-4
DEFAULT_TAU_POINTS = 100
TAU_ANCHORS = (0.25, 0.5, 0.75, 1.0)
_INDEX_SLACK = 1e-9

# Open/closed delta ranges per method: (lower, upper, upper_inclusive)
DELTA_RANGES = {
    "preliminary": (0.0, 1.0, False),
    "one_step": (0.5, 1.0, False),
    "second_preliminary": (0.25, 0.5, True),
    "two_step": (0.25, 0.5, True),
    "pathwise_two_step": (0.25, 0.5, True),
    "reference_mle": (0.0, 1.0, False),
}

GAMMA_RATIO = special.gamma(0.75) / special.gamma(0.25)


def check_delta(method, delta):
    if method not in DELTA_RANGES:
        raise ConfigError(f"unknown method '{method}', expected one of {sorted(DELTA_RANGES)}")
    lower, upper, inclusive = DELTA_RANGES[method]
    ok = delta > lower and (delta <= upper if inclusive else delta < upper)
    if not ok:
        bracket = "]" if inclusive else ")"
        raise ConfigError(f"delta={delta} outside ({lower}, {upper}{bracket} required by method {method}")
    return float(delta)


def tau_delta(T, delta):
    return T ** (delta - 1.0)


def learning_index(path, delta):
    """First grid index at or after T^delta, where T is the path horizon."""
    if not 0 < delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    j = int(np.ceil(path.horizon ** delta / path.h - _INDEX_SLACK))
    if j > path.n_steps:
        raise InsufficientDataError(f"learning window T^delta exceeds the path horizon {path.horizon}")
    return j


def _learning_values(path, delta):
    j = learning_index(path, delta)
    if j < MIN_LEARNING_STEPS:
        raise InsufficientDataError(
            f"learning window [0, T^delta] holds {j} grid steps, need at least {MIN_LEARNING_STEPS}"
        )
    return path.values[:j]


def make_tau_grid(T, delta, points=DEFAULT_TAU_POINTS):
    """Geometric points from tau_delta to 0.1, uniform points from 0.1 to 1, plus anchors.

    Args:
        T (float): Horizon
        delta (float): Learning exponent
        points (int): Number of points before the anchors are merged in

    Returns:
        np.ndarray: Increasing grid in [tau_delta, 1]
    """
    if points < 1:
        raise ConfigError("tau grid must contain at least one point")
    start = tau_delta(T, delta)
    if points == 1:
        return np.array([1.0])
    if start < 0.1 and points >= 4:
        n_geo = points // 2
        grid = np.concatenate([
            np.geomspace(start, 0.1, n_geo, endpoint=False),
            np.linspace(0.1, 1.0, points - n_geo),
        ])
    else:
        grid = np.linspace(start, 1.0, points)
    anchors = [a for a in TAU_ANCHORS if a > start]
    return np.unique(np.concatenate([grid, anchors]))


def _tau_indices(path, tau_grid, j_delta):
    """Map tau values to grid indices k >= j_delta; returns (realized taus, indices)."""
    taus = np.unique(np.atleast_1d(np.asarray(tau_grid, dtype=float)))
    if taus.size == 0:
        raise ConfigError("tau grid is empty")
    n = path.n_steps
    floor = j_delta / n
    low = taus < floor - 1e-12 - path.h / path.horizon
    if np.any(low) or np.any(taus > 1.0 + 1e-12):
        bad = taus[low | (taus > 1.0 + 1e-12)]
        raise WindowError(f"tau values {bad.tolist()} outside [tau_delta={floor:.6g}, 1]")
    ks = np.clip(np.ceil(taus * n - _INDEX_SLACK).astype(int), j_delta, n)
    ks = np.unique(ks)
    return ks / n, ks


@dataclass(frozen=True)
class ScoreSample:
    tau: float
    value: np.ndarray
    normalization: float


@dataclass
class EstimatorTrajectory:
    """Estimator-process values theta(tau) on a tau-grid with provenance."""

    tau_grid: np.ndarray
    estimates: np.ndarray
    method: str
    delta: float
    T: float
    preliminary: Optional[np.ndarray]
    clamped: bool = False
    h: Optional[float] = None
    seed: Optional[int] = None
    model: Optional[str] = None
    fisher_mode: str = "quadrature"
    grid_start: Optional[np.ndarray] = None

    @property
    def dim(self):
        return self.estimates.shape[1]

    def at(self, tau):
        """Estimate at the grid point nearest to tau."""
        return self.estimates[int(np.argmin(np.abs(self.tau_grid - tau)))]

    def to_frame(self):
        df = pd.DataFrame({"tau": self.tau_grid})
        for i in range(self.dim):
            df[f"theta_{i + 1}"] = self.estimates[:, i]
        return df

    def to_csv(self, filename):
        self.to_frame().to_csv(filename, index=False, float_format="%.17g")

    def metadata(self):
        out = {
            "method": self.method,
            "model": self.model,
            "delta": self.delta,
            "T": self.T,
            "h": self.h,
            "seed": self.seed,
            "preliminary": None if self.preliminary is None else np.asarray(self.preliminary).tolist(),
            "clamped": bool(self.clamped),
            "fisher_mode": self.fisher_mode,
        }
        if self.grid_start is not None:
            out["grid_start"] = np.asarray(self.grid_start).tolist()
        return out

    def to_dict(self):
        out = self.metadata()
        out["tau"] = self.tau_grid.tolist()
        out["estimates"] = self.estimates.tolist()
        return out


# --- preliminary estimators -------------------------------------------------

def _mean_from_values(values):
    return np.array([float(np.mean(values))])


def _quartic2d_from_values(values):
    alpha = float(np.mean(values))
    second = float(np.mean((values - alpha) ** 2))
    if not second > 0:
        raise DegeneratePreliminaryError("second moment of the learning window is zero")
    # E(X - alpha)^2 = sqrt(2) * GAMMA_RATIO / sqrt(beta) under the invariant law
    beta = GAMMA_RATIO ** 2 * (second / np.sqrt(2.0)) ** -2
    return np.array([alpha, beta])


def _ou_from_values(values):
    second = float(np.mean(values ** 2))
    if not second > 0:
        raise DegeneratePreliminaryError("second moment of the learning window is zero")
    return np.array([0.5 / second])


PRELIMINARY_FROM_VALUES = {
    "quartic": _mean_from_values,
    "quartic2d": _quartic2d_from_values,
    "ou": _ou_from_values,
}


def _clamp_optional(theta, theta_space):
    if theta_space is None:
        return theta
    return theta_space.clamp(theta)[0]


def preliminary_quartic(path, delta, theta_space=None):
    """Empirical mean of X over the learning window [0, T^delta]."""
    return _clamp_optional(_mean_from_values(_learning_values(path, delta)), theta_space)


def preliminary_quartic2d(path, delta, theta_space=None):
    """Moment estimator (alpha_bar, beta_bar) over the learning window.

    alpha_bar is the time average and beta_bar inverts the stationary second
    moment: beta = 2 * (Gamma(3/4) / Gamma(1/4))^2 / m2^2.
    """
    return _clamp_optional(_quartic2d_from_values(_learning_values(path, delta)), theta_space)


def preliminary_ou(path, delta, theta_space=None):
    """theta_bar = 1 / (2 * mean X^2), inverting the stationary variance 1 / (2 theta)."""
    return _clamp_optional(_ou_from_values(_learning_values(path, delta)), theta_space)


def preliminary_from_values(model, values):
    """Registered preliminary estimator of `model` applied to learning-window values, clamped.

    Returns:
        tuple: (estimate, clamped flag)
    """
    key = model.preliminary or model.name
    if key not in PRELIMINARY_FROM_VALUES:
        raise ConfigError(f"no preliminary estimator registered for model {model.name}")
    raw = PRELIMINARY_FROM_VALUES[key](np.asarray(values, dtype=float))
    theta, clamped = model.theta_space.clamp(raw)
    if clamped:
        logger.warning("Preliminary estimate %s clamped into Theta as %s", raw.tolist(), theta.tolist())
    return theta, clamped


def preliminary_estimate(model, path, delta):
    return preliminary_from_values(model, _learning_values(path, delta))


# --- score processes --------------------------------------------------------

def _score_terms(model, theta_grad, theta_drift, path, j0, j1):
    """Per-step terms grad S(theta_grad, X_j) / sigma^2 * [dX_j - S(theta_drift, X_j) h], j in [j0, j1)."""
    x = path.values[j0:j1]
    dx = path.values[j0 + 1:j1 + 1] - x
    s = model.sigma(x)
    grad = model.drift_grad(theta_grad, x) / (s * s)[:, None]
    innovation = dx - model.drift(theta_drift, x) * path.h
    return grad * innovation[:, None]


def _partial_sums(terms, counts):
    """Sums of the first `counts[i]` rows of terms (counts may be 0)."""
    cumulative = np.concatenate([np.zeros((1, terms.shape[1])), np.cumsum(terms, axis=0)])
    return cumulative[counts]


def _single_index(path, delta, tau):
    j_delta = learning_index(path, delta)
    _, ks = _tau_indices(path, [tau], j_delta)
    return j_delta, int(ks[0])


def score_delta_mixed(model, theta_grad, theta_drift, path, delta, tau):
    """Mixed score: grad S taken at theta_grad, innovation drift at theta_drift."""
    theta_grad = model.check_theta(theta_grad)
    theta_drift = model.check_theta(theta_drift)
    j_delta, k = _single_index(path, delta, tau)
    terms = _score_terms(model, theta_grad, theta_drift, path, j_delta, k)
    norm = np.sqrt(k * path.h)
    return ScoreSample(tau=k / path.n_steps, value=terms.sum(axis=0) / norm, normalization=norm)


def score_delta(model, theta, path, delta, tau):
    """Delta_tau(theta) = (tau T)^{-1/2} int_{T^delta}^{tau T} grad S / sigma^2 [dX - S dt]."""
    return score_delta_mixed(model, theta, theta, path, delta, tau)


def _antiderivative_difference(model, theta, a, b):
    if model.grad_antiderivative is not None:
        return model.grad_antiderivative(theta, b) - model.grad_antiderivative(theta, a)
    if a == b:
        return np.zeros(model.dim_param)
    integrand = lambda y: model.drift_grad(theta, y) / model.sigma(y) ** 2
    value, _ = integrate.quad_vec(integrand, a, b, epsrel=1e-10)
    return np.asarray(value, dtype=float)


def _pathwise_raw(model, theta, path, j0, k):
    """sqrt(tau T) * Delta°: endpoint term plus Riemann sums of the Ito correction and drift terms."""
    if k == j0:
        return np.zeros(model.dim_param)
    endpoint = _antiderivative_difference(model, theta, path.values[j0], path.values[k])
    x = path.values[j0:k]
    s = model.sigma(x)
    s_dx = model.sigma_dx(x)
    grad = model.drift_grad(theta, x)
    correction = (grad * (s * s_dx - model.drift(theta, x))[:, None]) / (s * s)[:, None]
    integrand = -0.5 * model.drift_grad_dx(theta, x) + correction
    return endpoint + integrand.sum(axis=0) * path.h


def score_delta_pathwise(model, theta, path, delta, tau):
    """Pathwise score without stochastic integrals, equal to Delta by the Ito formula."""
    theta = model.check_theta(theta)
    j_delta, k = _single_index(path, delta, tau)
    norm = np.sqrt(k * path.h)
    raw = _pathwise_raw(model, theta, path, j_delta, k)
    return ScoreSample(tau=k / path.n_steps, value=raw / norm, normalization=norm)


# --- Fisher information helpers ---------------------------------------------

def _fisher(model, theta, path, t_end, mode):
    if mode == "quadrature":
        return fisher_quadrature(model, theta)
    if mode == "empirical":
        return empirical_fisher(model, theta, path, 0.0, t_end)
    raise ConfigError(f"unknown fisher_mode '{mode}', expected quadrature or empirical")


class _LatticeFisher:
    """Fisher matrices at parameters rounded to a 1e-4 lattice."""

    def __init__(self, model, path, mode):
        self.model = model
        self.path = path
        self.mode = mode
        self._cache = {}

    def __call__(self, theta, k):
        key = tuple(np.round(np.asarray(theta) / FISHER_LATTICE).astype(np.int64).tolist())
        if self.mode == "empirical":
            key = key + (k,)
        if key not in self._cache:
            lattice = self.model.theta_space.clamp(np.array(key[:self.model.dim_param]) * FISHER_LATTICE)[0]
            self._cache[key] = _fisher(self.model, lattice, self.path, k * self.path.h, self.mode)
        return self._cache[key]


# --- estimator-processes ----------------------------------------------------

def _prepare(method, model, path, delta, tau_grid, preliminary):
    check_delta(method, delta)
    j_delta = learning_index(path, delta)
    if preliminary is None:
        theta_pre, clamped = preliminary_estimate(model, path, delta)
    else:
        theta_pre, clamped = model.theta_space.clamp(model.check_theta(preliminary))
    if tau_grid is None:
        tau_grid = make_tau_grid(path.horizon, delta)
    taus, ks = _tau_indices(path, tau_grid, j_delta)
    return j_delta, theta_pre, clamped, taus, ks


def _trajectory(method, model, path, delta, taus, estimates, theta_pre, clamped, fisher_mode, grid_start=None):
    estimates, moved = model.theta_space.clamp(np.atleast_2d(estimates))
    if moved:
        logger.debug("%s estimates clamped into Theta", method)
    return EstimatorTrajectory(
        tau_grid=taus, estimates=estimates, method=method, delta=float(delta), T=path.horizon,
        preliminary=None if theta_pre is None else np.asarray(theta_pre), clamped=bool(clamped or moved),
        h=path.h, seed=path.seed, model=model.name, fisher_mode=fisher_mode, grid_start=grid_start,
    )


def _newton_scoring(model, theta, fisher, path, j_delta, ks):
    """theta + I^{-1} (tau T)^{-1} int_{T^delta}^{tau T} ... for every k, in one pass."""
    terms = _score_terms(model, theta, theta, path, j_delta, int(ks[-1]))
    sums = _partial_sums(terms, ks - j_delta)
    return theta + (sums @ fisher.inv.T) / (ks * path.h)[:, None]


def preliminary_process(model, path, delta, tau_grid=None, fisher_mode="quadrature", preliminary=None):
    j_delta, theta_pre, clamped, taus, ks = _prepare("preliminary", model, path, delta, tau_grid, preliminary)
    estimates = np.tile(theta_pre, (len(taus), 1))
    return _trajectory("preliminary", model, path, delta, taus, estimates, theta_pre, clamped, fisher_mode)


def one_step_process(model, path, delta, tau_grid=None, fisher_mode="quadrature", preliminary=None):
    """One-step MLE-process theta*_tau = theta_bar + I(theta_bar)^{-1} Delta_tau / sqrt(tau T).

    A single Fisher matrix at the preliminary estimate is used for the whole
    trajectory, and the score integral is accumulated once along the path, so
    the cost is linear in the number of observations whatever the grid size.

    Args:
        model (DiffusionModel): Diffusion model
        path (SamplePath): Observations on [0, T]
        delta (float): Learning exponent in (1/2, 1)
        tau_grid (array-like, optional): Grid in [tau_delta, 1]; default from make_tau_grid
        fisher_mode (str): "quadrature" or "empirical" (learning-window average)
        preliminary (array-like, optional): Override of the registered preliminary estimator

    Returns:
        EstimatorTrajectory: Method "one_step"
    """
    j_delta, theta_bar, clamped, taus, ks = _prepare("one_step", model, path, delta, tau_grid, preliminary)
    fisher = _fisher(model, theta_bar, path, j_delta * path.h, fisher_mode)
    estimates = _newton_scoring(model, theta_bar, fisher, path, j_delta, ks)
    return _trajectory("one_step", model, path, delta, taus, estimates, theta_bar, clamped, fisher_mode)


def _second_stage(model, path, delta, tau_grid, fisher_mode, preliminary, method):
    j_delta, theta_tilde, clamped, taus, ks = _prepare(method, model, path, delta, tau_grid, preliminary)
    fisher = _fisher(model, theta_tilde, path, j_delta * path.h, fisher_mode)
    bars, moved = model.theta_space.clamp(_newton_scoring(model, theta_tilde, fisher, path, j_delta, ks))
    return j_delta, theta_tilde, bool(clamped or moved), taus, ks, bars


def second_preliminary(model, prelim, path, delta, tau, fisher_mode="quadrature"):
    """theta_bar_tau = theta_tilde + (tau T)^{-1/2} I(theta_tilde)^{-1} Delta_tau(theta_tilde)."""
    *_, bars = _second_stage(model, path, delta, [tau], fisher_mode, prelim, "second_preliminary")
    return bars[0]


def second_preliminary_process(model, path, delta, tau_grid=None, fisher_mode="quadrature", preliminary=None):
    j_delta, theta_tilde, clamped, taus, ks, bars = _second_stage(
        model, path, delta, tau_grid, fisher_mode, preliminary, "second_preliminary")
    return _trajectory("second_preliminary", model, path, delta, taus, bars, theta_tilde, clamped, fisher_mode)


def two_step_process(model, path, delta, tau_grid=None, fisher_mode="quadrature", preliminary=None):
    """Two-step MLE-process for delta in (1/4, 1/2].

    theta**_tau = theta_bar_tau + I(theta_bar_tau)^{-1} Delta_hat(theta_tilde, theta_bar_tau) / sqrt(tau T),
    where the mixed score keeps grad S at the first-stage estimate and moves
    only the drift in the innovation to the second preliminary estimate.
    """
    j_delta, theta_tilde, clamped, taus, ks, bars = _second_stage(
        model, path, delta, tau_grid, fisher_mode, preliminary, "two_step")
    fisher_at = _LatticeFisher(model, path, fisher_mode)
    x = path.values[j_delta:ks[-1]]
    dx = path.values[j_delta + 1:ks[-1] + 1] - x
    s = model.sigma(x)
    grad = model.drift_grad(theta_tilde, x) / (s * s)[:, None]
    grad_dx = _partial_sums(grad * dx[:, None], ks - j_delta)
    estimates = np.empty_like(bars)
    for i, (k, theta_bar) in enumerate(zip(ks, bars)):
        m = k - j_delta
        mixed = grad_dx[i] - (grad[:m].T @ model.drift(theta_bar, x[:m])) * path.h
        estimates[i] = theta_bar + fisher_at(theta_bar, k).inv @ mixed / (k * path.h)
    return _trajectory("two_step", model, path, delta, taus, estimates, theta_tilde, clamped, fisher_mode)


def pathwise_two_step_process(model, path, delta, tau_grid=None, fisher_mode="quadrature", preliminary=None):
    """Two-step variant whose final correction uses the pathwise score at theta_bar_tau."""
    j_delta, theta_tilde, clamped, taus, ks, bars = _second_stage(
        model, path, delta, tau_grid, fisher_mode, preliminary, "pathwise_two_step")
    fisher_at = _LatticeFisher(model, path, fisher_mode)
    estimates = np.empty_like(bars)
    for i, (k, theta_bar) in enumerate(zip(ks, bars)):
        raw = _pathwise_raw(model, theta_bar, path, j_delta, k)
        estimates[i] = theta_bar + fisher_at(theta_bar, k).inv @ raw / (k * path.h)
    return _trajectory("pathwise_two_step", model, path, delta, taus, estimates, theta_tilde, clamped,
                       fisher_mode)


# --- reference MLE ----------------------------------------------------------

@dataclass
class MLEFit:
    theta: np.ndarray
    log_likelihood: float
    iterations: int
    on_boundary: bool
    converged: bool = True
    grid_start: np.ndarray = field(default=None, repr=False)


def log_likelihood(model, theta, path, k):
    """int_0^{kh} S / sigma^2 dX - 1/2 int_0^{kh} S^2 / sigma^2 dt as left-point sums."""
    x = path.values[:k]
    dx = path.values[1:k + 1] - x
    s2 = model.sigma(x) ** 2
    drift = model.drift(theta, x)
    return float(np.sum(drift * dx / s2) - 0.5 * np.sum(drift * drift / s2) * path.h)


def _score_and_information(model, theta, x, dx, h):
    s2 = model.sigma(x) ** 2
    innovation = dx - model.drift(theta, x) * h
    grad = model.drift_grad(theta, x) / s2[:, None]
    score = grad.T @ innovation
    hess = model.drift_hess(theta, x)
    observed = (grad.T @ (grad * s2[:, None])) * h - np.einsum("jab,j->ab", hess, innovation / s2)
    return score, 0.5 * (observed + observed.T)


def fit_reference_mle(model, path, tau=1.0, grid_points=41, max_newton=20, tol=1e-12):
    """Maximize the discretized log-likelihood on [0, tau T].

    A grid search over Theta picks the start, then Newton steps with the
    observed information (including the second-derivative term) refine it.
    Steps that lower the likelihood are halved.
    """
    if not 0 < tau <= 1 + 1e-12:
        raise WindowError(f"tau must lie in (0, 1], got {tau}")
    if grid_points < 1:
        raise ConfigError(f"grid_points must be positive, got {grid_points}")
    k = max(int(np.ceil(tau * path.n_steps - _INDEX_SLACK)), 1)
    space = model.theta_space
    grid = space.grid(grid_points)
    values = np.array([log_likelihood(model, theta, path, k) for theta in grid])
    theta = grid[int(np.nanargmax(values))]
    best = log_likelihood(model, theta, path, k)
    start = theta.copy()

    x = path.values[:k]
    dx = path.values[1:k + 1] - x
    converged = False
    iterations = 0
    for iterations in range(1, max_newton + 1):
        score, observed = _score_and_information(model, theta, x, dx, path.h)
        eigenvalues = np.linalg.eigvalsh(observed)
        if eigenvalues[0] <= 0:
            # fall back to the expected-information (scoring) direction
            s2 = model.sigma(x) ** 2
            grad = model.drift_grad(theta, x) / s2[:, None]
            observed = (grad.T @ (grad * s2[:, None])) * path.h
        step = np.linalg.solve(observed, score)
        for _ in range(40):
            candidate = space.clamp(theta + step)[0]
            value = log_likelihood(model, candidate, path, k)
            if value >= best - 1e-12 * abs(best):
                break
            step = 0.5 * step
        else:
            logger.debug("Newton iteration %d found no ascent from theta=%s", iterations, theta.tolist())
            break
        moved = candidate - theta
        theta, best = candidate, value
        logger.debug("Newton iteration %d: theta=%s loglik=%.12g", iterations, theta.tolist(), best)
        if np.max(np.abs(moved)) <= tol * (1.0 + np.max(np.abs(theta))):
            converged = True
            break

    margin = 2e-6 * (space.upper_array - space.lower_array)
    on_boundary = bool(np.any(theta <= space.lower_array + margin) or np.any(theta >= space.upper_array - margin))
    return MLEFit(theta=theta, log_likelihood=best, iterations=iterations, on_boundary=on_boundary,
                  converged=converged, grid_start=start)


def reference_mle(model, path, tau=1.0, grid_points=41):
    """Grid-plus-Newton maximizer of the likelihood on [0, tau T]."""
    fit = fit_reference_mle(model, path, tau, grid_points)
    if fit.on_boundary:
        logger.warning("Reference MLE at tau=%.4g lies on the boundary of Theta: %s", tau, fit.theta.tolist())
    return fit.theta


def ou_closed_form_mle(path, tau=1.0):
    """-sum X_j (X_{j+1} - X_j) / sum X_j^2 h on [0, tau T]."""
    k = max(int(np.ceil(tau * path.n_steps - _INDEX_SLACK)), 1)
    x = path.values[:k]
    dx = path.values[1:k + 1] - x
    return -float(np.sum(x * dx)) / (float(np.sum(x * x)) * path.h)


def reference_mle_process(model, path, delta, tau_grid=None, fisher_mode="quadrature", preliminary=None,
                          grid_points=41):
    check_delta("reference_mle", delta)
    j_delta = learning_index(path, delta)
    if tau_grid is None:
        tau_grid = make_tau_grid(path.horizon, delta)
    taus, ks = _tau_indices(path, tau_grid, j_delta)
    fits = [fit_reference_mle(model, path, k / path.n_steps, grid_points) for k in ks]
    estimates = np.array([fit.theta for fit in fits])
    boundary = any(fit.on_boundary for fit in fits)
    # the maximizer uses no preliminary estimate
    return _trajectory("reference_mle", model, path, delta, taus, estimates, None, boundary, fisher_mode,
                       grid_start=fits[-1].grid_start)


ESTIMATORS = {
    "preliminary": preliminary_process,
    "one_step": one_step_process,
    "second_preliminary": second_preliminary_process,
    "two_step": two_step_process,
    "pathwise_two_step": pathwise_two_step_process,
    "reference_mle": reference_mle_process,
}


def run_estimator(method, model, path, delta, tau_grid=None, fisher_mode="quadrature", mle_grid_points=41):
    if method not in ESTIMATORS:
        raise ConfigError(f"unknown method '{method}', expected one of {sorted(ESTIMATORS)}")
    if method == "reference_mle":
        return reference_mle_process(model, path, delta, tau_grid=tau_grid, fisher_mode=fisher_mode,
                                     grid_points=mle_grid_points)
    return ESTIMATORS[method](model, path, delta, tau_grid=tau_grid, fisher_mode=fisher_mode)

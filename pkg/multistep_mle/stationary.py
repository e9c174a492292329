"""Invariant density, moments and Fisher information by quadrature.

The unnormalized log density is
    log_unnorm(x) = 2 * int_0^x S(theta, y) / sigma(y)^2 dy - 2 * log sigma(x)
and all density work stays in log space until the final exponentiation.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from multistep_mle.errors import DegenerateFisherError, ErgodicityViolationError, QuadratureError

logger = logging.getLogger(__name__)

TAIL_TOL = 1e-16
MAX_SUPPORT = 1e3
GRID_NODES = 8193  # odd, for Simpson's rule
COARSE_NODES = 1000  # per half line during the truncation search
QUAD_RTOL = 1e-10
MIN_EIGENVALUE = 1e-10

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _segment_integrals(fn, a, b):
    """Gauss-Legendre integral of fn over every segment [a_i, b_i]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    points = mid[..., None] + half[..., None] * _GL_NODES
    return half * (fn(points) @ _GL_WEIGHTS)


def _integral_from_zero(fn, x, segment=0.25):
    """int_0^x fn for a scalar x, split into segments of length <= `segment`."""
    pieces = int(np.ceil(abs(x) / segment)) + 1
    edges = np.linspace(0.0, x, pieces + 1)
    return float(np.sum(_segment_integrals(fn, edges[:-1], edges[1:])))


def _log_unnorm_on_grid(model, theta, grid, anchor):
    """log_unnorm at the nodes of an increasing grid, given the exponent integral at grid[0]."""
    ratio = lambda y: model.drift_over_sigma2(theta, y)
    steps = _segment_integrals(ratio, grid[:-1], grid[1:])
    exponent = anchor + np.concatenate([[0.0], np.cumsum(steps)])
    return 2.0 * exponent - 2.0 * np.log(model.sigma(grid))


def _find_support(model, theta, tail_tol):
    log_drop = -np.log(tail_tol)
    widths = [2.0 ** k for k in range(10)] + [MAX_SUPPORT]
    for width in widths:
        xs = np.linspace(-width, width, 2 * COARSE_NODES + 1)
        ratio = lambda y: model.drift_over_sigma2(theta, y)
        steps = _segment_integrals(ratio, xs[:-1], xs[1:])
        # xs[COARSE_NODES] == 0 anchors the exponent integral
        exponent = np.empty_like(xs)
        exponent[COARSE_NODES] = 0.0
        exponent[COARSE_NODES + 1:] = np.cumsum(steps[COARSE_NODES:])
        exponent[:COARSE_NODES] = -np.cumsum(steps[:COARSE_NODES][::-1])[::-1]
        ell = 2.0 * exponent - 2.0 * np.log(model.sigma(xs))
        if not np.all(np.isfinite(ell)):
            continue
        cutoff = ell.max() - log_drop
        boundary_ok = np.all(model.ergodicity_diagnostic(theta, np.array([-width, width])) < 0)
        if ell[0] < cutoff and ell[-1] < cutoff and boundary_ok:
            above = np.nonzero(ell >= cutoff)[0]
            step = xs[1] - xs[0]
            lo = max(xs[above[0]] - step, -width)
            hi = min(xs[above[-1]] + step, width)
            return lo, hi
    raise ErgodicityViolationError(
        f"density of model {model.name} at theta={np.asarray(theta).tolist()} "
        f"does not fall below {tail_tol:g} of its maximum within |x| <= {MAX_SUPPORT:g}"
    )


@dataclass(frozen=True)
class DensityTable:
    """Tabulated invariant density f(theta, .) on a truncated support."""

    theta: np.ndarray
    grid: np.ndarray
    log_unnorm: np.ndarray
    log_G: float
    cdf: np.ndarray
    model: object = field(default=None, repr=False, compare=False)

    @property
    def density(self):
        return np.exp(self.log_unnorm - self.log_G)

    def log_pdf(self, x):
        """Exact log density at arbitrary points, integrating from the nearest grid node."""
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        idx = np.clip(np.searchsorted(self.grid, flat) - 1, 0, len(self.grid) - 1)
        nodes = self.grid[idx]
        sigma_nodes = self.model.sigma(nodes)
        exponent_nodes = 0.5 * self.log_unnorm[idx] + np.log(sigma_nodes)
        ratio = lambda y: self.model.drift_over_sigma2(self.theta, y)
        exponent = exponent_nodes + _segment_integrals(ratio, nodes, flat)
        out = 2.0 * exponent - 2.0 * np.log(self.model.sigma(flat)) - self.log_G
        return out.reshape(x.shape)

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def sample(self, uniforms):
        """Inverse-CDF transform of uniforms in (0, 1)."""
        return np.interp(uniforms, self.cdf, self.grid)


def build_density(model, theta, tail_tol=TAIL_TOL):
    """Tabulate the invariant density of `model` at `theta`.

    Args:
        model (DiffusionModel): Diffusion model
        theta (array-like): Parameter in Theta
        tail_tol (float): Relative density level at which the support is truncated

    Returns:
        DensityTable: Grid, log density, normalizing constant and CDF
    """
    theta = model.check_theta(theta)
    return _density_cached(model, tuple(theta.tolist()), float(tail_tol))


@lru_cache(maxsize=1024)
def _density_cached(model, theta_key, tail_tol):
    theta = np.array(theta_key)
    lo, hi = _find_support(model, theta, tail_tol)
    grid = np.linspace(lo, hi, GRID_NODES)
    ratio = lambda y: model.drift_over_sigma2(theta, y)
    anchor = _integral_from_zero(ratio, lo)
    log_unnorm = _log_unnorm_on_grid(model, theta, grid, anchor)
    peak = float(log_unnorm.max())

    table = DensityTable(theta=theta, grid=grid, log_unnorm=log_unnorm, log_G=0.0,
                         cdf=np.zeros_like(grid), model=model)

    def scaled(x):
        return float(np.exp(table.log_pdf(np.array([x]))[0] - peak))

    mode = float(grid[np.argmax(log_unnorm)])
    value, abserr = integrate.quad(scaled, lo, hi, points=[mode], epsabs=0.0,
                                   epsrel=QUAD_RTOL, limit=500)
    if not np.isfinite(value) or value <= 0:
        raise QuadratureError(f"normalizing constant quadrature failed for theta={theta.tolist()}")
    if abserr > 10 * QUAD_RTOL * value:
        logger.warning("Normalizing constant error estimate %.2e exceeds tolerance at theta=%s",
                       abserr / value, theta.tolist())
    log_G = peak + float(np.log(value))

    density = np.exp(log_unnorm - log_G)
    cdf = np.clip(integrate.cumulative_trapezoid(density, grid, initial=0.0), 0.0, 1.0)
    for arr in (theta, grid, log_unnorm, cdf):
        arr.flags.writeable = False
    logger.debug("Density table for %s at theta=%s on [%.4f, %.4f]", model.name, theta.tolist(), lo, hi)
    return DensityTable(theta=theta, grid=grid, log_unnorm=log_unnorm, log_G=log_G, cdf=cdf, model=model)


def density_moment(table, k, center=0.0):
    """int (x - center)^k f(theta, x) dx over the table grid."""
    if k < 0:
        raise ValueError(f"moment order must be non-negative, got {k}")
    return float(integrate.simpson((table.grid - center) ** k * table.density, x=table.grid))


@dataclass(frozen=True)
class FisherMatrix:
    mat: np.ndarray
    inv: np.ndarray
    inv_sqrt: np.ndarray
    sqrt: np.ndarray
    eigenvalues: np.ndarray
    theta: np.ndarray
    source: str

    @classmethod
    def from_matrix(cls, mat, theta, source):
        """Symmetrize, check non-degeneracy and cache the inverse and square roots."""
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        mat = 0.5 * (mat + mat.T)
        eigenvalues, vectors = np.linalg.eigh(mat)
        if not np.all(np.isfinite(eigenvalues)) or eigenvalues[0] < MIN_EIGENVALUE:
            raise DegenerateFisherError(eigenvalues[0], np.asarray(theta).tolist())
        inv = (vectors / eigenvalues) @ vectors.T
        inv_sqrt = (vectors / np.sqrt(eigenvalues)) @ vectors.T
        sqrt = (vectors * np.sqrt(eigenvalues)) @ vectors.T
        return cls(mat=mat, inv=inv, inv_sqrt=inv_sqrt, sqrt=sqrt, eigenvalues=eigenvalues,
                   theta=np.asarray(theta, dtype=float).copy(), source=source)

    @property
    def dim(self):
        return self.mat.shape[0]

    def to_dict(self):
        return {
            "theta": self.theta.tolist(),
            "source": self.source,
            "fisher": self.mat.tolist(),
            "inverse": self.inv.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }


def fisher_quadrature(model, theta, tail_tol=TAIL_TOL):
    """I(theta) = int grad S grad S^T / sigma^2 f dx against the density table.

    Results are cached per (model, theta), so repeated calls at the same
    parameter are cheap.
    """
    theta = model.check_theta(theta)
    return _fisher_cached(model, tuple(theta.tolist()), float(tail_tol))


@lru_cache(maxsize=8192)
def _fisher_cached(model, theta_key, tail_tol):
    table = _density_cached(model, theta_key, tail_tol)
    theta = table.theta
    grad = model.drift_grad(theta, table.grid)
    s = model.sigma(table.grid)
    weight = table.density / (s * s)
    integrand = grad[:, :, None] * grad[:, None, :] * weight[:, None, None]
    mat = integrate.simpson(integrand, x=table.grid, axis=0)
    return FisherMatrix.from_matrix(mat, theta, "quadrature")


def empirical_fisher(model, theta, path, t_start, t_end):
    """I(theta, t) by a left-point Riemann average of grad S grad S^T / sigma^2 along the path.

    Args:
        model (DiffusionModel): Diffusion model
        theta (array-like): Parameter
        path (SamplePath): Observed path
        t_start (float): Window start time
        t_end (float): Window end time

    Returns:
        FisherMatrix: Matrix with source "empirical"
    """
    theta = model.check_theta(theta)
    if not 0 <= t_start < t_end <= path.horizon * (1 + 1e-12):
        raise ValueError(f"need 0 <= t_start < t_end <= {path.horizon}, got [{t_start}, {t_end}]")
    j0 = path.index_at(t_start)
    j1 = path.index_at(t_end)
    if j1 <= j0:
        raise ValueError(f"window [{t_start}, {t_end}] contains no grid step")
    x = path.values[j0:j1]
    grad = model.drift_grad(theta, x)
    s = model.sigma(x)
    integrand = grad[:, :, None] * grad[:, None, :] / (s * s)[:, None, None]
    return FisherMatrix.from_matrix(integrand.mean(axis=0), theta, "empirical")


def mde_limit_variance_quartic(table):
    """Limit variance D^2 of the empirical-mean preliminary for the quartic model.

    D^2 = 4 * int J(x)^2 / f(x) dx with J(x) = int_{-inf}^x (y - theta) f(y) dy.
    J is accumulated from the nearer tail on each side of theta so that the
    ratio stays accurate where both J and f are tiny.
    """
    if table.model is None or table.model.name != "quartic":
        raise ValueError("mde_limit_variance_quartic needs a density table of the quartic model")
    theta = float(table.theta[0])
    grid = table.grid
    f = table.density
    integrand = (grid - theta) * f
    from_left = integrate.cumulative_trapezoid(integrand, grid, initial=0.0)
    from_right = -integrate.cumulative_trapezoid(integrand[::-1], grid[::-1], initial=0.0)[::-1]
    inner = np.where(grid < theta, from_left, -from_right)
    with np.errstate(divide="ignore"):
        log_ratio = 2.0 * np.log(np.abs(inner)) - (table.log_unnorm - table.log_G)
    ratio = np.where(inner != 0.0, np.exp(log_ratio), 0.0)
    return float(4.0 * integrate.simpson(ratio, x=grid))


def inner_integral_quartic(table, xi):
    """J(xi) = int_{-inf}^{xi} (y - theta) f(y) dy by adaptive quadrature (negative for finite xi)."""
    theta = float(table.theta[0])
    lo = float(table.grid[0])
    value, _ = integrate.quad(lambda y: (y - theta) * float(table.pdf(np.array([y]))[0]),
                              lo, xi, limit=200)
    return value

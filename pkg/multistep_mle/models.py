import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from multistep_mle.errors import ConfigError

logger = logging.getLogger(__name__)

# Relative width of the margin used when projecting a parameter back into the open box
CLAMP_MARGIN = 1e-6


@dataclass(frozen=True)
class ParameterSpace:
    """Open box Theta = prod (lower_i, upper_i).

    Bounds are stored as tuples so that spaces (and the models holding them)
    stay hashable and can key caches.
    """

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lower) == 0 or len(lower) != len(upper):
            raise ConfigError(f"bounds must be non-empty and of equal length, got {lower} and {upper}")
        for i, (a, b) in enumerate(zip(lower, upper)):
            if not (np.isfinite(a) and np.isfinite(b)):
                raise ConfigError(f"bounds for coordinate {i} must be finite, got ({a}, {b})")
            if a >= b:
                raise ConfigError(f"lower bound {a} must be below upper bound {b} (coordinate {i})")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self):
        return len(self.lower)

    @property
    def lower_array(self):
        return np.array(self.lower)

    @property
    def upper_array(self):
        return np.array(self.upper)

    @property
    def midpoint(self):
        return 0.5 * (self.lower_array + self.upper_array)

    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta > self.lower_array) and np.all(theta < self.upper_array))

    def clamp(self, theta):
        """Project theta into Theta shrunk by CLAMP_MARGIN * (upper - lower).

        Args:
            theta (array-like): Parameter vector of length d

        Returns:
            tuple: (clamped parameter as ndarray, bool flag telling whether it moved)
        """
        theta = np.asarray(theta, dtype=float)
        margin = CLAMP_MARGIN * (self.upper_array - self.lower_array)
        lo = self.lower_array + margin
        hi = self.upper_array - margin
        inside = np.all((theta >= lo) & (theta <= hi), axis=-1)
        if np.all(inside):
            return theta.copy(), False
        return np.clip(theta, lo, hi), True

    def grid(self, points):
        """Interior grid with `points` values per coordinate, shape (points**d, d)."""
        axes = [np.linspace(a, b, points + 2)[1:-1] for a, b in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class DiffusionModel:
    """Scalar diffusion dX = S(theta, X) dt + sigma(X) dW with analytic derivatives.

    All callbacks are vectorized in x: for an array x of shape s, `drift` and
    `sigma` return shape s, `drift_grad` and `drift_grad_dx` return s + (d,),
    `drift_hess` returns s + (d, d). Callbacks must be pure.
    """

    name: str
    dim_param: int
    drift: Callable
    drift_grad: Callable
    drift_hess: Callable
    drift_grad_dx: Callable
    sigma: Callable
    sigma_dx: Callable
    theta_space: ParameterSpace
    grad_antiderivative: Optional[Callable] = None
    preliminary: Optional[str] = None

    def __post_init__(self):
        if self.dim_param < 1:
            raise ConfigError(f"dim_param must be positive, got {self.dim_param}")
        if self.theta_space.dim != self.dim_param:
            raise ConfigError(
                f"model {self.name} has {self.dim_param} parameters but bounds have {self.theta_space.dim}"
            )

    def check_theta(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.dim_param,):
            raise ConfigError(f"model {self.name} expects {self.dim_param} parameters, got {theta.tolist()}")
        if not np.all(np.isfinite(theta)):
            raise ConfigError(f"parameter must be finite, got {theta.tolist()}")
        return theta

    def ergodicity_diagnostic(self, theta, x):
        """sgn(x) * S(theta, x) / sigma(x)^2; negative values indicate mean reversion."""
        x = np.asarray(x, dtype=float)
        s = self.sigma(x)
        return np.sign(x) * self.drift(theta, x) / (s * s)

    def drift_over_sigma2(self, theta, x):
        s = self.sigma(x)
        return self.drift(theta, x) / (s * s)


def check_drift_condition(model, theta_grid=None, x_min=10.0, x_max=1e3, points=200):
    """Check the drift sign condition on |x| in [x_min, x_max] for every theta in theta_grid.

    Returns:
        bool: True when the diagnostic is negative everywhere
    """
    if theta_grid is None:
        theta_grid = model.theta_space.grid(5)
    xs = np.geomspace(x_min, x_max, points)
    xs = np.concatenate([-xs[::-1], xs])
    ok = True
    for theta in np.atleast_2d(theta_grid):
        diagnostic = model.ergodicity_diagnostic(theta, xs)
        if not np.all(diagnostic < 0):
            logger.warning("Drift condition fails for model %s at theta=%s", model.name, theta.tolist())
            ok = False
    return ok


# Built-in model callbacks are module-level functions so that models pickle
# cleanly into worker processes.

def _unit_sigma(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _zero_sigma_dx(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _quartic_drift(theta, x):
    y = x - theta[0]
    return -(y * y * y)


def _quartic_grad(theta, x):
    y = np.asarray(x - theta[0], dtype=float)
    return (3.0 * y * y)[..., None]


def _quartic_hess(theta, x):
    y = np.asarray(x - theta[0], dtype=float)
    return (-6.0 * y)[..., None, None]


def _quartic_grad_dx(theta, x):
    y = np.asarray(x - theta[0], dtype=float)
    return (6.0 * y)[..., None]


def _quartic_antiderivative(theta, x):
    y = np.asarray(x - theta[0], dtype=float)
    return (y * y * y)[..., None]


def _quartic2d_drift(theta, x):
    y = x - theta[0]
    return -theta[1] * (y * y * y)


def _quartic2d_grad(theta, x):
    y = np.asarray(x - theta[0], dtype=float)
    return np.stack([3.0 * theta[1] * y * y, -(y * y * y)], axis=-1)


def _quartic2d_hess(theta, x):
    y = np.asarray(x - theta[0], dtype=float)
    d_aa = -6.0 * theta[1] * y
    d_ab = 3.0 * y * y
    d_bb = np.zeros_like(y)
    row_a = np.stack([d_aa, d_ab], axis=-1)
    row_b = np.stack([d_ab, d_bb], axis=-1)
    return np.stack([row_a, row_b], axis=-2)


def _quartic2d_grad_dx(theta, x):
    y = np.asarray(x - theta[0], dtype=float)
    return np.stack([6.0 * theta[1] * y, -3.0 * y * y], axis=-1)


def _quartic2d_antiderivative(theta, x):
    y = np.asarray(x - theta[0], dtype=float)
    y2 = y * y
    return np.stack([theta[1] * y2 * y, -0.25 * y2 * y2], axis=-1)


def _ou_drift(theta, x):
    return -theta[0] * x


def _ou_grad(theta, x):
    return (-np.asarray(x, dtype=float))[..., None]


def _ou_hess(theta, x):
    return np.zeros_like(np.asarray(x, dtype=float))[..., None, None]


def _ou_grad_dx(theta, x):
    return -np.ones_like(np.asarray(x, dtype=float))[..., None]


def _ou_antiderivative(theta, x):
    x = np.asarray(x, dtype=float)
    return (-0.5 * x * x)[..., None]


def _as_space(bounds):
    if isinstance(bounds, ParameterSpace):
        return bounds
    if isinstance(bounds, dict):
        return ParameterSpace(bounds["lower"], bounds["upper"])
    lower, upper = bounds
    return ParameterSpace(lower, upper)


def quartic_model(a, b):
    """dX = -(X - theta)^3 dt + dW on Theta = (a, b)."""
    if not a < b:
        raise ConfigError(f"quartic model needs a < b, got a={a}, b={b}")
    return DiffusionModel(
        name="quartic",
        dim_param=1,
        drift=_quartic_drift,
        drift_grad=_quartic_grad,
        drift_hess=_quartic_hess,
        drift_grad_dx=_quartic_grad_dx,
        sigma=_unit_sigma,
        sigma_dx=_zero_sigma_dx,
        theta_space=ParameterSpace((a,), (b,)),
        grad_antiderivative=_quartic_antiderivative,
        preliminary="quartic",
    )


def quartic2d_model(bounds):
    """dX = -beta (X - alpha)^3 dt + dW with theta = (alpha, beta), beta > 0."""
    space = _as_space(bounds)
    if space.dim != 2:
        raise ConfigError(f"quartic2d needs 2-dimensional bounds, got {space.dim}")
    if space.lower[1] <= 0:
        raise ConfigError(f"quartic2d needs beta bounded away from 0, got lower bound {space.lower[1]}")
    return DiffusionModel(
        name="quartic2d",
        dim_param=2,
        drift=_quartic2d_drift,
        drift_grad=_quartic2d_grad,
        drift_hess=_quartic2d_hess,
        drift_grad_dx=_quartic2d_grad_dx,
        sigma=_unit_sigma,
        sigma_dx=_zero_sigma_dx,
        theta_space=space,
        grad_antiderivative=_quartic2d_antiderivative,
        preliminary="quartic2d",
    )


def ou_model(theta_space):
    """Ornstein-Uhlenbeck dX = -theta X dt + dW."""
    space = _as_space(theta_space)
    if space.dim != 1:
        raise ConfigError(f"ou model is 1-dimensional, got bounds of dimension {space.dim}")
    if space.lower[0] <= 0:
        raise ConfigError(f"ou model needs a positive theta range, got lower bound {space.lower[0]}")
    return DiffusionModel(
        name="ou",
        dim_param=1,
        drift=_ou_drift,
        drift_grad=_ou_grad,
        drift_hess=_ou_hess,
        drift_grad_dx=_ou_grad_dx,
        sigma=_unit_sigma,
        sigma_dx=_zero_sigma_dx,
        theta_space=space,
        grad_antiderivative=_ou_antiderivative,
        preliminary="ou",
    )


DEFAULT_BOUNDS = {
    "quartic": {"lower": [0.0], "upper": [2.0]},
    "quartic2d": {"lower": [-1.0, 0.25], "upper": [1.0, 3.0]},
    "ou": {"lower": [0.1], "upper": [5.0]},
}


def make_model(model_id, bounds=None):
    """Build a registered model by string id.

    Args:
        model_id (str): One of "quartic", "quartic2d", "ou"
        bounds (dict | ParameterSpace | None): Parameter box; defaults per model when None

    Returns:
        DiffusionModel: The model
    """
    if model_id not in DEFAULT_BOUNDS:
        raise ConfigError(f"unknown model '{model_id}', expected one of {sorted(DEFAULT_BOUNDS)}")
    space = _as_space(bounds if bounds is not None else DEFAULT_BOUNDS[model_id])
    if model_id == "quartic":
        if space.dim != 1:
            raise ConfigError(f"quartic model is 1-dimensional, got bounds of dimension {space.dim}")
        return quartic_model(space.lower[0], space.upper[0])
    if model_id == "quartic2d":
        return quartic2d_model(space)
    return ou_model(space)

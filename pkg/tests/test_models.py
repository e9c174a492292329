import numpy as np
import pytest

from multistep_mle.errors import ConfigError
from multistep_mle.models import (
    CLAMP_MARGIN,
    DiffusionModel,
    ParameterSpace,
    check_drift_condition,
    make_model,
    quartic2d_model,
    quartic_model,
)

XS = np.linspace(-2.5, 3.5, 13)
EPS = 1e-6


def _fd_theta(fn, theta, i):
    up = np.array(theta, dtype=float)
    down = up.copy()
    up[i] += EPS
    down[i] -= EPS
    return (fn(up, XS) - fn(down, XS)) / (2 * EPS)


@pytest.mark.parametrize("model_id, theta", [
    ("quartic", [1.0]),
    ("quartic2d", [0.2, 1.5]),
    ("ou", [1.3]),
])
def test_derivatives_agree_with_finite_differences(model_id, theta):
    model = make_model(model_id)
    grad = model.drift_grad(np.array(theta), XS)
    hess = model.drift_hess(np.array(theta), XS)
    assert grad.shape == XS.shape + (model.dim_param,)
    assert hess.shape == XS.shape + (model.dim_param, model.dim_param)
    for i in range(model.dim_param):
        np.testing.assert_allclose(grad[:, i], _fd_theta(model.drift, theta, i), rtol=1e-6, atol=1e-6)
        np.testing.assert_allclose(hess[:, :, i], _fd_theta(model.drift_grad, theta, i), rtol=1e-6, atol=1e-6)

    grad_dx = model.drift_grad_dx(np.array(theta), XS)
    fd_x = (model.drift_grad(np.array(theta), XS + EPS) - model.drift_grad(np.array(theta), XS - EPS)) / (2 * EPS)
    np.testing.assert_allclose(grad_dx, fd_x, rtol=1e-6, atol=1e-6)

    # unit diffusion: d/dx of the antiderivative is grad S / sigma^2
    anti = model.grad_antiderivative
    fd_anti = (anti(np.array(theta), XS + EPS) - anti(np.array(theta), XS - EPS)) / (2 * EPS)
    np.testing.assert_allclose(fd_anti, grad, rtol=1e-6, atol=1e-6)


def test_quartic_values():
    model = quartic_model(0.0, 2.0)
    theta = np.array([1.0])
    assert model.drift(theta, np.array([2.0]))[0] == -1.0
    assert model.drift_grad(theta, np.array([3.0]))[0, 0] == 12.0
    assert model.drift_hess(theta, np.array([3.0]))[0, 0, 0] == -12.0
    assert model.drift_grad_dx(theta, np.array([3.0]))[0, 0] == 12.0


def test_hessian_of_quartic2d_is_symmetric(quartic2d):
    hess = quartic2d.drift_hess(np.array([0.3, 2.0]), XS)
    np.testing.assert_array_equal(hess, np.swapaxes(hess, -1, -2))


def test_parameter_space_validation():
    with pytest.raises(ConfigError):
        ParameterSpace((1.0,), (1.0,))
    with pytest.raises(ConfigError):
        ParameterSpace((0.0, 0.0), (1.0,))
    with pytest.raises(ConfigError):
        ParameterSpace((-np.inf,), (1.0,))
    with pytest.raises(ConfigError):
        quartic_model(2.0, 1.0)


def test_clamp_keeps_interior_points_and_projects_outside_ones():
    space = ParameterSpace((0.0,), (2.0,))
    theta, moved = space.clamp([1.2])
    assert not moved and theta[0] == 1.2

    theta, moved = space.clamp([5.0])
    assert moved
    assert theta[0] == pytest.approx(2.0 - 2.0 * CLAMP_MARGIN)
    assert space.contains(theta)

    rows, moved = space.clamp(np.array([[0.5], [-1.0]]))
    assert moved
    assert rows[0, 0] == 0.5 and rows[1, 0] > 0.0


def test_grid_is_interior():
    space = ParameterSpace((-1.0, 0.25), (1.0, 3.0))
    grid = space.grid(5)
    assert grid.shape == (25, 2)
    assert all(space.contains(theta) for theta in grid)


def test_make_model_rejects_bad_input():
    with pytest.raises(ConfigError):
        make_model("cubic")
    with pytest.raises(ConfigError):
        make_model("quartic", {"lower": [0.0, 0.0], "upper": [1.0, 1.0]})
    with pytest.raises(ConfigError):
        quartic2d_model({"lower": [-1.0, 0.0], "upper": [1.0, 3.0]})
    with pytest.raises(ConfigError):
        make_model("ou", {"lower": [-1.0], "upper": [1.0]})


def test_check_theta(quartic2d):
    assert quartic2d.check_theta([0.1, 1.0]).shape == (2,)
    with pytest.raises(ConfigError):
        quartic2d.check_theta([0.1])
    with pytest.raises(ConfigError):
        quartic2d.check_theta([np.nan, 1.0])


@pytest.mark.parametrize("model_id", ["quartic", "quartic2d", "ou"])
def test_builtin_models_are_mean_reverting(model_id):
    assert check_drift_condition(make_model(model_id))


def test_explosive_drift_fails_the_ergodicity_check(caplog):
    explosive = DiffusionModel(
        name="explosive", dim_param=1,
        drift=lambda theta, x: theta[0] * x,
        drift_grad=lambda theta, x: np.asarray(x, dtype=float)[..., None],
        drift_hess=lambda theta, x: np.zeros_like(np.asarray(x, dtype=float))[..., None, None],
        drift_grad_dx=lambda theta, x: np.ones_like(np.asarray(x, dtype=float))[..., None],
        sigma=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        sigma_dx=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        theta_space=ParameterSpace((0.1,), (1.0,)),
    )
    assert not check_drift_condition(explosive)
    assert "Drift condition fails" in caplog.text


def test_models_are_hashable(quartic):
    assert hash(quartic) == hash(make_model("quartic"))

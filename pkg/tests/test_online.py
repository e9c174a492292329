import numpy as np
import pytest

from multistep_mle.errors import InsufficientDataError
from multistep_mle.estimate import learning_index, one_step_process
from multistep_mle.online import OnlineOneStep
from multistep_mle.simulate import simulate_path


def test_streaming_matches_the_batch_estimator(quartic):
    path = simulate_path(quartic, [1.0], 100.0, 0.01, seed=31)
    delta = 0.75
    j0 = learning_index(path, delta)
    checkpoints = [j0 + 1, j0 + 250, 5000, path.n_steps]
    batch = one_step_process(quartic, path, delta, tau_grid=[k / path.n_steps for k in checkpoints])

    online = OnlineOneStep(quartic, delta, T=100.0, h=0.01, x0=path.values[0])
    seen = {}
    for j, x in enumerate(path.values[1:], start=1):
        estimate = online.push(x)
        if j < j0:
            assert estimate is None
        if j in checkpoints:
            seen[j] = estimate

    assert online.ready and online.steps == path.n_steps and online.tau == 1.0
    np.testing.assert_array_equal(online.preliminary, batch.preliminary)
    for i, k in enumerate(checkpoints):
        np.testing.assert_allclose(seen[k], batch.estimates[i], rtol=1e-10)


def test_learning_phase_and_horizon(ou):
    online = OnlineOneStep(ou, 0.75, T=20.0, h=0.01, x0=0.1)
    assert online.estimate is None and not online.ready
    online.extend(np.full(online.learning_steps - 1, 0.5))
    assert not online.ready
    assert online.push(0.5) is not None
    n = online.learning_steps
    assert online.preliminary[0] == pytest.approx(0.5 * n / (0.1 ** 2 + 0.5 ** 2 * (n - 1)), rel=1e-12)
    online.extend(np.zeros(online.n_total - online.steps))
    with pytest.raises(ValueError):
        online.push(0.0)


def test_short_learning_window_is_rejected(quartic):
    with pytest.raises(InsufficientDataError):
        OnlineOneStep(quartic, 0.6, T=10.0, h=0.5, x0=0.0)

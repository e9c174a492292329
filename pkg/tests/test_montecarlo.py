import json
from dataclasses import replace

import numpy as np
import pytest

from multistep_mle.config import ExperimentConfig
from multistep_mle.errors import (
    AcceptanceError,
    ConfigError,
    ExperimentFailedError,
    SimulationDivergedError,
    WindowError,
)
from multistep_mle.estimate import one_step_process, ou_closed_form_mle
from multistep_mle.montecarlo import (
    CheckResult,
    acceptance_checks,
    consistency_trend,
    efficiency_report,
    finite_horizon_variance,
    gate,
    run_experiment,
    score_equivalence_check,
    wiener_increment_check,
)
from multistep_mle.models import make_model
from multistep_mle.simulate import noise_free_path, simulate_path
from multistep_mle.stationary import fisher_quadrature

BASE = ExperimentConfig(
    model_id="ou", theta_true=(1.0,), lower=(0.1,), upper=(5.0,), T=50.0, h=0.01, delta=0.75,
    method="one_step", tau_points=20, replicates=6, seed=7, chunk_size=4,
)


@pytest.fixture(scope="module")
def base_stats():
    return run_experiment(BASE, progress=False)


@pytest.fixture(scope="module")
def anchored_stats():
    config = replace(BASE, delta=0.6, tau_values=(0.25, 0.5, 0.75, 1.0))
    return run_experiment(config, progress=False)


def test_statistics_shapes(base_stats):
    n_tau = len(base_stats.tau_grid)
    assert base_stats.n_success == 6 and base_stats.failure_count == 0
    assert base_stats.standardized.shape == (6, n_tau, 1)
    assert base_stats.mean.shape == (n_tau, 1)
    assert base_stats.cov.shape == (n_tau, 1, 1)
    assert base_stats.predicted_cov.shape == (n_tau, 1, 1)
    assert base_stats.tau_grid[-1] == 1.0
    assert len(base_stats.to_frame()) == n_tau
    assert "one_step" in base_stats.summary_line()
    assert base_stats.fisher_true[0, 0] == pytest.approx(0.5, rel=1e-8)
    payload = json.loads(json.dumps(base_stats.to_dict(include_samples=True)))
    assert payload["schema_version"] == "1"
    assert payload["config"]["montecarlo"]["seed"] == 7
    assert len(payload["standardized"]) == 6
    frame = base_stats.trajectories_frame()
    assert list(frame.columns) == ["replicate", "tau", "theta_1"]
    assert len(frame) == 6 * n_tau


def test_standardized_errors_follow_the_definition(base_stats):
    scale = np.sqrt(base_stats.tau_grid * BASE.T)[None, :, None]
    expected = base_stats.errors * np.sqrt(0.5) * scale
    np.testing.assert_allclose(base_stats.standardized, expected, rtol=1e-7)


def test_results_do_not_depend_on_chunking_or_workers(base_stats):
    for changes in ({"chunk_size": 1}, {"chunk_size": 25}, {"workers": 2, "chunk_size": 2}):
        other = run_experiment(replace(BASE, **changes), progress=False)
        np.testing.assert_array_equal(other.standardized, base_stats.standardized)
        np.testing.assert_array_equal(other.cov, base_stats.cov)


def test_failed_replicates_are_excluded_and_counted():
    model = BASE.build_model()

    def factory(index, seed):
        if index == 0:
            return SimulationDivergedError(12)
        return simulate_path(model, BASE.theta_true, BASE.T, BASE.h, seed)

    with pytest.raises(ExperimentFailedError):
        run_experiment(BASE, path_factory=factory, progress=False)

    stats = run_experiment(replace(BASE, max_failure_rate=0.5), path_factory=factory, progress=False)
    assert stats.n_success == 5 and stats.failure_count == 1
    assert stats.failures[0]["index"] == 0
    assert "SimulationDivergedError" in stats.failures[0]["error"]
    assert stats.indices == [1, 2, 3, 4, 5]


def test_finite_horizon_variance(ou):
    fisher = fisher_quadrature(ou, [1.0])
    taus = np.array([0.1, 1.0])
    predicted = finite_horizon_variance(fisher, 100.0, 0.5, taus, np.array([[0.04]]))
    # c = 1 at tau_delta: the preliminary spread alone
    assert predicted[0, 0, 0] == pytest.approx(10.0 * 0.5 * 0.04)
    assert predicted[1, 0, 0] == pytest.approx(100.0 * 0.01 * 0.5 * 0.04 + 0.9)
    # without preliminary spread only the learning-window share is missing
    assert finite_horizon_variance(fisher, 100.0, 0.5, [1.0], np.zeros((1, 1)))[0, 0, 0] == pytest.approx(0.9)


def test_wiener_increment_check(anchored_stats):
    assert anchored_stats.increments is not None
    report = wiener_increment_check(anchored_stats, min_replicates=3)
    assert report.correlation.shape == (1,)
    assert report.variance_ratio.shape == (2, 1)
    assert set(report.to_dict()) == {"pairs", "correlation", "variance_ratio", "passed"}
    with pytest.raises(WindowError):
        wiener_increment_check(anchored_stats, ((0.25, 0.75), (0.5, 1.0)), min_replicates=3)
    with pytest.raises(WindowError):
        wiener_increment_check(anchored_stats, ((0.5, 0.25), (0.75, 1.0)), min_replicates=3)
    with pytest.raises(WindowError):
        wiener_increment_check(anchored_stats, ((0.25, 0.5),), min_replicates=3)
    with pytest.raises(ValueError):
        wiener_increment_check(anchored_stats)


def test_acceptance_checks_and_gate(anchored_stats):
    results = acceptance_checks(anchored_stats)
    assert results and all(isinstance(r, CheckResult) for r in results)
    by_name = {r.name: r for r in results}
    assert {"mean tau=0.25 component=1 vs identity", "mean tau=0.25 component=1 vs finite-horizon"} <= set(by_name)
    t = anchored_stats.tau_index(1.0)
    raw = anchored_stats.variance_ratio[t, 0]
    assert by_name["variance tau=1 component=1 vs identity"].value == pytest.approx(raw)
    assert by_name["variance tau=1 component=1 vs finite-horizon"].value == pytest.approx(
        raw / anchored_stats.predicted_cov[t, 0, 0])

    identity_only = acceptance_checks(anchored_stats, targets=("identity",))
    assert identity_only and all(r.name.endswith("vs identity") for r in identity_only)
    with pytest.raises(ConfigError):
        acceptance_checks(anchored_stats, targets=("bogus",))
    with pytest.raises(AcceptanceError) as excinfo:
        gate(anchored_stats, variance_bounds=(100.0, 200.0))
    assert any(name.startswith("variance") for name in excinfo.value.failed_checks)


def test_noise_free_replicate_has_zero_error():
    config = ExperimentConfig(
        model_id="quartic", theta_true=(1.0,), lower=(0.0,), upper=(2.0,), T=50.0, h=0.01, delta=0.75,
        method="one_step", tau_points=10, replicates=1, seed=3,
    )
    # a path started at theta_0 never moves without noise
    path = noise_free_path(config.build_model(), [1.0], 1.0, 50.0, 0.01)
    stats = run_experiment(config, path_factory=lambda index, seed: path, progress=False)
    assert stats.n_success == 1
    np.testing.assert_array_equal(stats.standardized, 0.0)
    np.testing.assert_array_equal(stats.cov, 0.0)
    assert stats.increments is None


def test_efficiency_report():
    fast = replace(BASE, replicates=3, tau_values=(0.5, 1.0))
    with pytest.raises(ConfigError):
        efficiency_report([fast])
    with pytest.raises(ConfigError):
        efficiency_report([fast, replace(fast, T=60.0)])
    table = efficiency_report([fast, replace(fast, method="reference_mle")])
    assert list(table["method"]) == ["one_step", "reference_mle"]
    assert table.loc[1, "cost_ratio_vs_reference"] == pytest.approx(1.0)
    assert np.all(table["second_moment"] > 0)


def test_consistency_trend():
    trend = consistency_trend(replace(BASE, replicates=3), horizons=(50.0, 100.0))
    assert list(trend["T"]) == [50.0, 100.0]
    assert np.all(trend["median_sup_error"] > 0)


def test_score_equivalence_gap_shrinks_with_the_step(ou):
    table = score_equivalence_check(ou, [1.0], T=10.0, h_levels=(0.02, 0.01, 0.005), paths=40)
    assert list(table["h"]) == [0.02, 0.01, 0.005]
    assert np.all(np.diff(table["rms_gap"]) < 0)
    assert np.isnan(table["contraction"].iloc[0])
    with pytest.raises(ConfigError):
        score_equivalence_check(ou, [1.0], T=10.0, h_levels=(0.01, 0.003))


@pytest.fixture(scope="module")
def one_step_quartic_stats():
    config = ExperimentConfig.from_dict({
        "model": {"id": "quartic", "theta_true": [1.0]},
        "estimator": {"method": "one_step", "delta": 0.75},
        "montecarlo": {"replicates": 300, "seed": 20240601},
    })
    return run_experiment(config, progress=False)


def _two_step_quartic_stats(T):
    config = ExperimentConfig.from_dict({
        "model": {"id": "quartic", "theta_true": [1.0]},
        "simulation": {"T": T},
        "estimator": {"method": "two_step", "delta": 0.375, "tau_grid": {"points": 40}},
        "montecarlo": {"replicates": 300, "seed": 20240601},
    })
    return run_experiment(config, progress=False)


@pytest.mark.slow
def test_one_step_quartic_matches_the_finite_horizon_prediction(one_step_quartic_stats):
    checks = acceptance_checks(one_step_quartic_stats, targets=("finite-horizon",))
    failed = [r for r in checks if not r.passed]
    assert checks and not failed, failed


@pytest.mark.slow
@pytest.mark.xfail(reason="at T=1000 the raw variance at tau=1 is about 1.37 and the increment "
                          "variance on (0.25, 0.5) about 1.7; see DESIGN.md", strict=False)
def test_one_step_quartic_identity_and_increment_targets(one_step_quartic_stats):
    checks = acceptance_checks(one_step_quartic_stats, targets=("identity", "increments"))
    failed = [r for r in checks if not r.passed]
    assert not failed, failed


@pytest.mark.slow
def test_two_step_quartic_variance_shrinks_with_the_horizon():
    shorter, longer = _two_step_quartic_stats(1000.0), _two_step_quartic_stats(3000.0)
    assert longer.variance_ratio[longer.tau_index(1.0), 0] < shorter.variance_ratio[shorter.tau_index(1.0), 0]


@pytest.mark.slow
@pytest.mark.xfail(reason="two-step variance ratio at tau=1 is about 2.4 at T=3000; see DESIGN.md", strict=False)
def test_two_step_quartic_acceptance():
    stats = _two_step_quartic_stats(3000.0)
    failed = [r for r in acceptance_checks(stats) if not r.passed]
    assert not failed, failed


@pytest.mark.slow
def test_one_step_agrees_with_the_ou_mle():
    model = make_model("ou")
    path = simulate_path(model, [1.0], 5000.0, 0.01, seed=3)
    traj = one_step_process(model, path, 0.75, tau_grid=[1.0])
    assert abs(traj.estimates[-1, 0] - ou_closed_form_mle(path)) < 0.05


@pytest.mark.slow
def test_score_equivalence_contraction(quartic):
    table = score_equivalence_check(quartic, [1.0], T=40.0, paths=40)
    assert np.all((table["contraction"].iloc[1:] > 1.1) & (table["contraction"].iloc[1:] < 1.8))


@pytest.mark.slow
def test_consistency_improves_with_the_horizon():
    config = ExperimentConfig.from_dict({
        "model": {"id": "quartic", "theta_true": [1.0]},
        "montecarlo": {"replicates": 100},
    })
    trend = consistency_trend(config, horizons=(500.0, 2000.0))
    assert trend["median_sup_error"].iloc[1] < trend["median_sup_error"].iloc[0]

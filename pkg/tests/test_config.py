import numpy as np
import pytest
import yaml

from multistep_mle.config import (
    DEFAULTS,
    OUTPUT_DIR_ENV,
    ExperimentConfig,
    expand_suites,
    load_config_file,
    output_dir,
    parse_override,
    resolve_config,
)
from multistep_mle.errors import ConfigError


def _write(tmp_path, data, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def test_precedence(tmp_path):
    config_file = _write(tmp_path, {"simulation": {"T": 500.0, "h": 0.02}})
    resolved = resolve_config(config_file, overrides=["simulation.T=200", {"estimator": {"delta": 0.6}}])
    assert resolved["simulation"]["T"] == 200
    assert resolved["simulation"]["h"] == 0.02
    assert resolved["estimator"]["delta"] == 0.6
    assert resolved["estimator"]["method"] == DEFAULTS["estimator"]["method"]
    # the defaults themselves are untouched
    assert DEFAULTS["simulation"]["T"] == 1000.0


def test_parse_override():
    assert parse_override("montecarlo.replicates=50") == {"montecarlo": {"replicates": 50}}
    assert parse_override("model.theta_true=[0.1, 2]") == {"model": {"theta_true": [0.1, 2]}}
    for bad in ["montecarlo.replicates", "=3", "a.b=[1,"]:
        with pytest.raises(ConfigError):
            parse_override(bad)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config_file(tmp_path / "missing.yaml")
    broken = tmp_path / "broken.yaml"
    broken.write_text("model: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config_file(broken)
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config_file(listing)
    with pytest.raises(ConfigError):
        resolve_config(preset="no-such-preset")


def test_preset_expands_into_suites():
    suites = [ExperimentConfig.from_dict(s) for s in expand_suites(resolve_config(preset="paper-example"))]
    assert [(c.method, c.delta) for c in suites] == [("one_step", 0.75), ("two_step", 0.375)]
    assert all(c.model_id == "quartic" and c.T == 1000.0 and c.replicates == 300 for c in suites)
    assert suites[0].lower == (0.0,) and suites[0].upper == (2.0,)


def test_quartic_reference_is_an_alias_of_the_default_preset():
    assert resolve_config(preset="quartic-reference") == resolve_config(preset="paper-example")


def test_round_trip_through_dict():
    config = ExperimentConfig.from_dict(resolve_config(overrides=["model.id=quartic2d",
                                                                  "model.theta_true=[0.2, 1.5]",
                                                                  "estimator.method=two_step",
                                                                  "estimator.delta=0.4"]))
    assert config.lower == (-1.0, 0.25)
    assert ExperimentConfig.from_dict(config.to_dict()) == config


@pytest.mark.parametrize("override", [
    "simulation.T=5",
    "simulation.h=0.5",
    "simulation.h=0.03",
    "montecarlo.replicates=0",
    "estimator.delta=0.3",
    "estimator.method=bogus",
    "estimator.fisher_mode=exact",
    "estimator.tau_grid.values=[]",
    "estimator.tau_grid.points=0",
    "model.theta_true=[3.0]",
    "model.theta_true=[1.0, 1.0]",
    "model.id=cubic",
    "montecarlo.standardize=sometimes",
    "montecarlo.max_failure_rate=2",
    "model.theta_true=abc",
])
def test_invalid_configs_are_rejected(override):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(resolve_config(overrides=[override]))


def test_tau_grid_and_model(tmp_path):
    config = ExperimentConfig.from_dict(resolve_config(overrides=["estimator.tau_grid.values=[0.5, 1.0]"]))
    np.testing.assert_array_equal(config.tau_grid(), [0.5, 1.0])
    assert config.build_model().name == "quartic"
    shorter = config.with_overrides(T=100.0)
    assert shorter.T == 100.0 and config.T == 1000.0


def test_output_dir(monkeypatch, tmp_path):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert str(output_dir(resolve_config())) == "results"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert output_dir(resolve_config()) == tmp_path / "env"
    assert output_dir(resolve_config(overrides=[f"output.dir={tmp_path / 'flag'}"])) == tmp_path / "flag"

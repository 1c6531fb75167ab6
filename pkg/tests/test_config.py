"""Unit tests for settings layering and JSON loading."""
import json
import os

import pytest

from subkit.utilities import config
from subkit.utilities.errors import ConfigError, InputError


def test_defaults():
    s = config.load_settings(env={})
    assert s.max_irreducibles == config.MAX_IRREDUCIBLES
    assert s.depth_limit == config.DEPTH_LIMIT
    assert s.seed == config.DEFAULT_SEED
    assert s.corpus == "default"


def test_environment_then_overrides():
    env = {config.ENV_MAX_ELEMS: "3", config.ENV_DEPTH_LIMIT: "5", config.ENV_SEED: "0x10"}
    s = config.load_settings(env=env)
    assert (s.max_irreducibles, s.depth_limit, s.seed) == (3, 5, 16)

    s = config.load_settings(env=env, max_irreducibles=2, seed=None)
    assert s.max_irreducibles == 2
    assert s.seed == 16


@pytest.mark.parametrize("env, overrides", [
    ({config.ENV_MAX_ELEMS: "many"}, {}),
    ({config.ENV_DEPTH_LIMIT: "0"}, {}),
    ({}, {"max_irreducibles": -1}),
    ({}, {"seed": -5}),
    ({}, {"corpus": "huge"}),
])
def test_bad_settings(env, overrides):
    with pytest.raises(ConfigError):
        config.load_settings(env=env, **overrides)


def test_config_error_is_input_error():
    assert issubclass(ConfigError, InputError)
    assert ConfigError.exit_code == 2


def test_load_json(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({"poset": {"elements": ["p"], "leq": []}}))
    assert config.load_json(str(path))["poset"]["elements"] == ["p"]


def test_load_json_errors(tmp_path):
    with pytest.raises(InputError):
        config.load_json(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InputError) as e:
        config.load_json(str(bad))
    assert "Invalid JSON" in str(e.value)


def test_shipped_data_files_exist():
    assert os.path.exists(config.data_path("regression_suite.json"))
    assert os.path.exists(config.data_path("models", "diamond.json"))

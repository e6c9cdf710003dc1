import json

import pytest

from monocluster_core.config.loader import DEFAULT_CONFIG, FAMILY_FIELDS, FROZEN_CONSTANTS, ConfigLoader
from monocluster_core.config.run_config import RunConfig, build_model
from monocluster_core.config.validator import Validator
from monocluster_core.core.errors import ConfigError


def write_config(path, **fields):
    path.write_text(json.dumps(fields), encoding="utf-8")
    return path


def test_bundled_default_loads():
    config = ConfigLoader().load_run_config(DEFAULT_CONFIG)
    assert config.dim == 1 and config.side == 2 and config.copies == 1
    assert config.sources == [[0.5], [1.5]]
    assert config.interaction.m == 2


def test_polynomial_string_is_parsed(tmp_path):
    path = write_config(tmp_path / "run.json", polynomial="x4+0.5x2")
    config = ConfigLoader().load_run_config(path)
    assert config.polynomial == [0.0, 0.0, 0.5, 0.0, 1.0]


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        ConfigLoader().load_run_config(tmp_path / "nope.json")


def test_invalid_json_and_schema_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        ConfigLoader().load_run_config(broken)
    # unknown keys are rejected by the schema
    with pytest.raises(ConfigError, match="schema"):
        ConfigLoader().load_run_config(write_config(tmp_path / "extra.json", colour="red"))
    with pytest.raises(ConfigError):
        ConfigLoader().load_run_config(write_config(tmp_path / "neg.json", lam=-1.0))


def test_model_level_checks(tmp_path):
    loader = ConfigLoader()
    with pytest.raises(ConfigError):
        loader.parse({"dim": 2, "sources": [[0.5]]})
    with pytest.raises(ConfigError):
        loader.parse({"polynomial": "x3"})


def test_overrides_are_validated():
    loader = ConfigLoader()
    config = RunConfig()
    assert loader.apply_overrides(config, {"side": None}) is config
    merged = loader.apply_overrides(config, {"side": 3, "lam": 0.1})
    assert merged.side == 3 and merged.lam == 0.1
    with pytest.raises(ConfigError):
        loader.apply_overrides(config, {"lam": -1.0})


def test_discover_prefers_the_working_directory(tmp_path):
    loader = ConfigLoader()
    assert loader.discover(tmp_path) == DEFAULT_CONFIG
    local = write_config(tmp_path / "run_config.json", side=3)
    assert loader.discover(tmp_path) == local
    assert loader.load_default(tmp_path).side == 3


def test_validator_rules():
    validator = Validator()
    assert validator.validate_run(RunConfig(sources=[[0.5]]), "enumerate")
    with pytest.raises(ConfigError, match="outside"):
        validator.validate_run(RunConfig(sources=[[7.5]]), "enumerate")
    with pytest.raises(ConfigError, match="p_max"):
        validator.validate_run(RunConfig(order=2, p_max=1), "verify-identity")
    big = RunConfig(side=5)
    with pytest.raises(ConfigError, match="variables"):
        validator.validate_run(big, "bounds", "parasite")
    assert validator.validate_run(big, "bounds", "simplex")


def test_build_model_uses_the_coupling():
    model = build_model(RunConfig(lam=0.2, sources=[[0.5]]))
    assert model.coupling == 0.2
    assert model.n_sources == 1
    assert build_model(RunConfig()).coupling == 0.0


def test_bundled_constants_match_the_default_family():
    with open(FROZEN_CONSTANTS, encoding="utf-8") as f:
        family = json.load(f)["family"]
    default = ConfigLoader().load_run_config(DEFAULT_CONFIG).model_dump()
    assert family == {k: default[k] for k in FAMILY_FIELDS}
    constants = ConfigLoader().load_constants()
    constants.check_compatible(build_model(ConfigLoader().load_run_config(DEFAULT_CONFIG)))


def test_constants_save_and_load(tmp_path):
    loader = ConfigLoader()
    constants = loader.load_constants()
    config = loader.load_run_config(DEFAULT_CONFIG)
    path = loader.save_constants(constants, tmp_path / "frozen.json", config)
    assert loader.load_constants(path) == constants
    assert json.loads(path.read_text(encoding="utf-8"))["family"]["p_max"] == config.p_max


def test_constants_file_errors(tmp_path):
    loader = ConfigLoader()
    with pytest.raises(FileNotFoundError):
        loader.load_constants(tmp_path / "absent.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError):
        loader.load_constants(broken)
    partial = tmp_path / "partial.json"
    partial.write_text(json.dumps({"constants": {"d": 1}}), encoding="utf-8")
    with pytest.raises(ConfigError):
        loader.load_constants(partial)

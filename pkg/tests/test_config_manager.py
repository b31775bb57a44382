import json

import pytest

from boundedflow.common import ConfigError, get_project_root
from boundedflow.utils.config_manager import OVERRIDE_FIELDS, ConfigManager, RunConfig


@pytest.fixture
def config_file(tmp_path):
    def write(data):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        return path
    return write


def test_defaults():
    config = ConfigManager().build()
    assert config.problem == "c2pi"
    assert (config.grid.t0, config.grid.t1, config.grid.n) == (-20.0, 20.0, 4001)
    assert config.tolerances.residual_tol == 1e-4
    assert config.attract.perturbations == [0.1, -0.1, 0.3]
    assert config.threads is None


def test_example_config_matches_defaults():
    manager = ConfigManager(get_project_root() / "config.example.json")
    assert manager.build().to_dict() == RunConfig().to_dict()


def test_layers_are_merged_in_order(config_file, monkeypatch):
    path = config_file({"problem": "exatt", "grid": {"n": 101}, "paths": {"output_dir": "from-file"},
                        "logging": {"level": "WARNING"}})
    monkeypatch.setenv("BOUNDEDFLOW_THREADS", "3")
    monkeypatch.setenv("BOUNDEDFLOW_LOG_LEVEL", "debug")
    config = ConfigManager(path).build(overrides={"grid.n": "201", "attract.perturbations": "0.5, -0.5"})
    assert config.problem == "exatt"
    assert config.grid.n == 201
    assert config.grid.t0 == -20.0
    assert config.output_dir == "from-file"
    assert config.threads == 3
    assert config.logging.level == "DEBUG"
    assert config.attract.perturbations == [0.5, -0.5]


def test_command_line_arguments_win(config_file):
    path = config_file({"problem": "exatt", "seed": 4, "paths": {"output_dir": "from-file"}})
    config = ConfigManager(path).build(problem="ex0", output_dir="from-cli", seed=9)
    assert (config.problem, config.output_dir, config.seed) == ("ex0", "from-cli", 9)


def test_env_file(tmp_path):
    env = tmp_path / ".env"
    env.write_text("BOUNDEDFLOW_THREADS=2\n", encoding="utf-8")
    assert ConfigManager(env_file=env).build().threads == 2


def test_inline_problem_is_kept(config_file):
    problem = {"F": {"kind": "seminorm01"}, "G": {"kind": "const", "function": {"kind": "decay"}}}
    assert ConfigManager(config_file({"problem": problem})).build().problem == problem


def test_empty_perturbation_list():
    assert ConfigManager().build(overrides={"attract.perturbations": ""}).attract.perturbations == []


def test_every_override_is_reachable():
    samples = {"log.level": "DEBUG", "log.file": "yes", "attract.perturbations": "0.2", "grid.n": "101",
               "solver.damping": "0.5", "grid.t0": "-30", "grid.t1": "30"}
    for name in OVERRIDE_FIELDS:
        value = samples.get(name, "7")
        ConfigManager().build(overrides={name: value})


@pytest.mark.parametrize("overrides", [
    {"grid.nodes": "10"},
    {"grid.n": "many"},
    {"grid.n": "3"},
    {"grid.t0": "30"},
    {"tol.quad": "0"},
    {"solver.damping": "1.5"},
    {"solver.max-iter": "0"},
    {"attract.h": "-1"},
    {"estimators.pairs": "1"},
])
def test_invalid_overrides(overrides):
    with pytest.raises(ConfigError):
        ConfigManager().build(overrides=overrides)


def test_unknown_override_lists_supported_ones():
    with pytest.raises(ConfigError, match="--grid.n"):
        ConfigManager().build(overrides={"grid.size": "5"})


@pytest.mark.parametrize("data", [
    {"solver": {"tolerance": 1.0}},
    {"plot": True},
    {"seed": -1},
    {"estimators": {"t_window": [1.0]}},
    {"problem": 42},
])
def test_invalid_files(config_file, data):
    with pytest.raises(ConfigError):
        ConfigManager(config_file(data)).build()


def test_bad_environment(monkeypatch):
    monkeypatch.setenv("BOUNDEDFLOW_THREADS", "four")
    with pytest.raises(ConfigError):
        ConfigManager().build()
    monkeypatch.setenv("BOUNDEDFLOW_THREADS", "0")
    with pytest.raises(ConfigError):
        ConfigManager().build()


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        ConfigManager(tmp_path / "absent.json")
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        ConfigManager(listing)
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError):
        ConfigManager(broken)


def test_get_full_config(config_file):
    data = {"problem": "ex1", "seed": 2}
    assert ConfigManager(config_file(data)).get_full_config() == data

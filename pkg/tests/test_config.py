""" Tests for loading and validating run files. """

import copy
import math
from pathlib import Path

import pytest

from elastodtn.config import (
    DEFAULT_TOLERANCE,
    RunMode,
    load_config,
    parse_config,
)
from elastodtn.exceptions import ConfigError
from elastodtn.models import WaveKind

CONFIGS = Path(__file__).parents[1] / "configs"

EXAMPLE = {
    "mode": "adapt",
    "medium": {"lambda": 2.0, "mu": 1.0, "omega": 2.0},
    "incidence": {"kind": "compressional", "theta": math.pi / 3},
    "geometry": {"period": 0.5, "b": 0.25},
    "adapt": {"tolerance": 0.05},
}


def _with(section: str, key: str, value) -> dict:
    data = copy.deepcopy(EXAMPLE)
    data.setdefault(section, {})[key] = value
    return data


def test_parse_example() -> None:
    config = parse_config(EXAMPLE)

    assert config.mode is RunMode.ADAPT
    assert config.medium.kappa_p == pytest.approx(1.0)
    assert config.medium.kappa_s == pytest.approx(2.0)
    assert config.problem.wave.kind is WaveKind.COMPRESSIONAL
    assert config.problem.profile.is_flat
    assert config.problem.b == 0.25
    assert config.adapt.tolerance == 0.05
    assert config.adapt.tau == 0.5
    assert config.outputs.directory == "out"
    assert config.study.divisions == (5, 10, 20, 40)


def test_tolerance_defaults() -> None:
    data = copy.deepcopy(EXAMPLE)
    del data["adapt"]

    assert parse_config(data).adapt.tolerance == DEFAULT_TOLERANCE


def test_unknown_keys_are_rejected() -> None:
    with pytest.raises(ConfigError) as error:
        parse_config(_with("medium", "nu", 0.3))
    assert error.value.key == "medium.nu"

    with pytest.raises(ConfigError) as error:
        parse_config({**EXAMPLE, "solver": {}})
    assert error.value.key == "solver"


@pytest.mark.parametrize(
    "section,key,value,path",
    [
        ("adapt", "tau", 1.5, "adapt.tau"),
        ("adapt", "tau", 0.0, "adapt.tau"),
        ("medium", "mu", -1.0, "medium.mu"),
        ("medium", "omega", 0.0, "medium.omega"),
        ("incidence", "theta", math.pi / 2, "incidence.theta"),
        ("geometry", "b", 0.0, "geometry.b"),
        ("study", "divisions", [5, 0], "study.divisions"),
    ],
)
def test_invalid_values_name_their_key(section, key, value, path) -> None:
    with pytest.raises(ConfigError) as error:
        parse_config(_with(section, key, value), "run.toml")

    assert error.value.key == path
    assert str(error.value).startswith("run.toml: ")


def test_missing_key_is_reported() -> None:
    data = copy.deepcopy(EXAMPLE)
    del data["medium"]["omega"]

    with pytest.raises(ConfigError) as error:
        parse_config(data)

    assert error.value.key == "medium.omega"
    assert "missing" in str(error.value)


def test_profile_must_span_the_period() -> None:
    data = _with("geometry", "profile", [[0.0, 0.0], [0.4, 0.0]])

    with pytest.raises(ConfigError) as error:
        parse_config(data)

    assert error.value.key == "geometry.profile"


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ConfigError) as error:
        load_config(tmp_path / "absent.toml")

    assert "cannot read" in str(error.value)


def test_malformed_toml(tmp_path: Path) -> None:
    path = tmp_path / "bad.toml"
    path.write_text("[medium\nmu = 1\n", encoding="utf-8")

    with pytest.raises(ConfigError) as error:
        load_config(path)

    assert error.value.path == str(path)


@pytest.mark.parametrize("name", ["example1.toml", "example2.toml"])
def test_shipped_configs_load(name: str) -> None:
    config = load_config(CONFIGS / name)

    assert config.mode is RunMode.ADAPT
    assert config.problem.period == 0.5
    assert config.study.omegas == (1.0, 2.0, 4.0)


def test_corner_example_profile() -> None:
    config = load_config(CONFIGS / "example2.toml")

    assert not config.problem.profile.is_flat
    assert config.problem.profile.max_height == pytest.approx(0.1)
    assert config.medium.lam == 1.0
    assert config.medium.mu == 2.0

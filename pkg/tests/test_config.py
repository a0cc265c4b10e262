import math

import pytest

from apdens.config import (
    ConfigError,
    SolverConfig,
    config_from_dict,
    config_to_dict,
    dump_config,
    load_config,
    loads_config,
    parse_override,
)


def test_round_trip_defaults():
    cfg = SolverConfig()
    assert loads_config(dump_config(cfg)) == cfg


def test_round_trip_custom():
    cfg = SolverConfig(np_max=50, cht="ec", epsilon=0.25, pool=((0.1, 0.2),), seed=9, const_np=5)
    assert loads_config(dump_config(cfg)) == cfg
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_file_then_overrides(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('cht = "ec"\nepsilon = 0.5\nseed = 4\n')
    cfg = load_config(p, ["epsilon=inf", "seed=7", "variant=ns"])
    assert cfg.cht == "ec" and math.isinf(cfg.epsilon)
    assert cfg.seed == 7 and cfg.variant == "ns"


@pytest.mark.parametrize("item,key,value", [
    ("seed=3", "seed", 3),
    ("cht=sp", "cht", "sp"),
    ("epsilon=1e-3", "epsilon", 1e-3),
    ("pool=[[0.5, 0.5]]", "pool", [[0.5, 0.5]]),
])
def test_parse_override(item, key, value):
    assert parse_override(item) == (key, value)


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="'bogus'"):
        load_config(None, ["bogus=1"])


@pytest.mark.parametrize("item", ["cht=xx", "variant=zz", "k=3", "np_min=2", "seed=1.5",
                                  "epsilon=-1", "lp=0", "novalue"])
def test_bad_values(item):
    with pytest.raises(ConfigError):
        load_config(None, [item])


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "none.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = = 1")
    with pytest.raises(ConfigError, match="malformed"):
        load_config(bad)


def test_nullable_keys():
    cfg = load_config(None, ["np_max=50", "np_max=none"])
    assert cfg.np_max is None
    assert load_config(None, ["ablation=none"]).ablation == "none"

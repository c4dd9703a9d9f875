import math

import pytest

from combscatter import ConfigurationError, bundled_config, load_config, parse_config
from combscatter.config import apply_overrides, config_to_dict, dump_config, load_config_dict


@pytest.mark.parametrize("name", ["isolator", "isolator41", "circulator", "circulator41.cfg"])
def test_bundled_configs_load(name):
    cfg = load_config(bundled_config(name))
    assert cfg.pumps and cfg.gamma > 0


def test_missing_bundled_config():
    with pytest.raises(FileNotFoundError):
        bundled_config("nothing")


def test_hz_values_become_angular(isolator):
    raw = load_config_dict(bundled_config("isolator"))
    assert isolator.gamma == pytest.approx(2 * math.pi * raw["gamma_hz"])
    assert isolator.comb.period == pytest.approx(1.0)
    assert isolator.modes == (-1, 0, 2)


def test_round_trip_through_toml(tmp_path, circulator):
    path = tmp_path / "c.cfg"
    path.write_text(dump_config(config_to_dict(circulator)))
    back = load_config(path)
    assert back == circulator


def test_overrides():
    raw = load_config_dict(bundled_config("isolator"))
    apply_overrides(raw, ["pumps.2.phase_rad=1.25", "gamma_hz=20", "comb.half_width=3", "label=iso"])
    cfg = parse_config(raw)
    assert cfg.pumps[2].phase == 1.25 and raw["label"] == "iso"
    assert cfg.gamma == pytest.approx(40 * math.pi) and cfg.comb.half_width == 3
    for bad in (["gamma_hz"], ["pumps.9.phase_rad=0"], ["pumps.x.phase_rad=0"]):
        with pytest.raises(ConfigurationError):
            apply_overrides(load_config_dict(bundled_config("isolator")), bad)


@pytest.mark.parametrize("mutate", [
    lambda r: r.pop("comb"),
    lambda r: r.pop("gamma_hz"),
    lambda r: r["pumps"][0].update(kind="medium"),
    lambda r: r["pumps"][0].update(amplitude="big"),
    lambda r: r.update(modes=[0, 9]),
])
def test_invalid_configs(mutate):
    raw = load_config_dict(bundled_config("isolator"))
    mutate(raw)
    with pytest.raises(ConfigurationError):
        parse_config(raw)


def test_malformed_toml(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("gamma_hz = = 3\n")
    with pytest.raises(ConfigurationError):
        load_config(path)

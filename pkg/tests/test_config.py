import pytest
import yaml

from mmwshare.config import (BsSharingScheduler, ConfigError, OperatorConfig, ScenarioConfig,
                             SharingRegime, load_yaml)
from mmwshare.radio import ChannelParams

GOOD = {
    "name": "two",
    "seed": 4,
    "regime": "full_sharing",
    "operators": [
        {"bandwidth_hz": 5e8, "bs_density": 50, "ue_density": 250},
        {"bandwidth_hz": 5e8, "bs_density": 50, "ue_density": 250},
    ],
    "slots": 100,
    "drops": 2,
}


def test_regime_flags():
    assert not SharingRegime.NO_SHARING.shared_bs and not SharingRegime.NO_SHARING.shared_spectrum
    assert SharingRegime.BS_SHARING_ONLY.shared_bs and not SharingRegime.BS_SHARING_ONLY.shared_spectrum
    assert SharingRegime.SPECTRUM_SHARING_ONLY.shared_spectrum
    assert SharingRegime.FULL_SHARING.shared_bs and SharingRegime.FULL_SHARING.shared_spectrum


def test_parse_good_config():
    cfg = ScenarioConfig.from_dict(GOOD)
    assert cfg.regime is SharingRegime.FULL_SHARING
    assert cfg.operators[0] == OperatorConfig(5e8, 50.0, 250.0)
    assert cfg.total_bandwidth_hz == 1e9
    assert cfg.slots == 100 and cfg.drops == 2 and cfg.seed == 4
    assert cfg.bs_sharing_scheduler is BsSharingScheduler.PER_BS
    assert cfg.channel == ChannelParams.load()


def test_exponent_strings_accepted():
    # YAML 1.1 loads 5e8 (no sign, no dot) as a string
    d = yaml.safe_load("operators: [{bandwidth_hz: 5e8, bs_density: 1, ue_density: 1}]")
    assert ScenarioConfig.from_dict(d).operators[0].bandwidth_hz == 5e8


def test_errors_are_collected_per_field():
    bad = {**GOOD, "operators": [{"bandwidth_hz": -1, "bs_density": "x"}],
           "slots": 0, "regime": "sometimes", "colour": "blue"}
    with pytest.raises(ConfigError) as exc:
        ScenarioConfig.from_dict(bad)
    msgs = "\n".join(exc.value.errors)
    for field in ("operators[0].bandwidth_hz", "operators[0].bs_density",
                  "operators[0].ue_density", "slots", "regime", "colour"):
        assert field in msgs


def test_empty_operator_list_rejected():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({**GOOD, "operators": []})


def test_hash_ignores_name_but_not_seed():
    a = ScenarioConfig.from_dict(GOOD)
    assert a.config_hash() == a.with_(name="other").config_hash()
    assert a.config_hash() != a.with_(seed=5).config_hash()
    assert a.config_hash() != a.with_(slots=101).config_hash()


def test_round_trip_through_dict():
    a = ScenarioConfig.from_dict(GOOD)
    d = a.to_dict()
    d["operators"] = [dict(o) for o in d["operators"]]
    assert ScenarioConfig.from_dict(d) == a


def test_channel_file_relative_to_config(tmp_path):
    ch = ChannelParams.load().to_dict()
    ch["los"]["intercept_db"] = 61.4
    (tmp_path / "ch.yaml").write_text(yaml.safe_dump(ch))
    cfg = ScenarioConfig.from_dict({**GOOD, "channel": "ch.yaml"}, base_dir=tmp_path)
    assert cfg.channel.los.intercept_db == 61.4


def test_missing_channel_file_is_a_field_error(tmp_path):
    with pytest.raises(ConfigError) as exc:
        ScenarioConfig.from_dict({**GOOD, "channel": "nope.yaml"}, base_dir=tmp_path)
    assert exc.value.errors[0].startswith("channel:")


def test_load_yaml_reports_syntax(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("a: [1, 2\n")
    with pytest.raises(ConfigError):
        load_yaml(p)

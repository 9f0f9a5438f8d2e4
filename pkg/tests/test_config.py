import json

import pytest

from t1rho_inr.config import (
    ConfigError,
    config_from_dict,
    default_phantom_regions,
    lambda_defaults_for,
    load_config,
    save_config,
)


def write_cfg(tmp_path, payload):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(payload))
    return p


def test_lambda_defaults_by_acceleration(tmp_path):
    cfg = load_config(write_cfg(tmp_path, {"R": 6, "tsl_ms": [1, 20, 40, 60, 80]}))
    assert cfg.lambda1 == 15.8
    assert cfg.lambda2 == 1277.0
    assert config_from_dict({"R": 10}).lambda2 == 1480.0
    assert config_from_dict({"R": 14}).lambda1 == 13.8
    # off-table accelerations take the nearest entry
    assert lambda_defaults_for(4) == (15.8, 1277.0)
    assert lambda_defaults_for(12) == (10.7, 1480.0)


def test_explicit_lambdas_override_defaults():
    cfg = config_from_dict({"R": 6, "lambda1": 2.5, "lambda2": 7.0})
    assert (cfg.lambda1, cfg.lambda2) == (2.5, 7.0)


def test_negative_grid_size_names_field(tmp_path):
    with pytest.raises(ConfigError, match="N_x"):
        load_config(write_cfg(tmp_path, {"N_x": -3}))


def test_tsl_strictly_increasing(tmp_path):
    with pytest.raises(ConfigError, match="strictly increasing"):
        load_config(write_cfg(tmp_path, {"tsl_ms": [20, 20]}))


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown config field"):
        config_from_dict({"N_z": 4})


def test_mode_tag_validated():
    assert config_from_dict({"mode": "hk"}).mode == "HK"
    with pytest.raises(ConfigError, match="mode"):
        config_from_dict({"mode": "all"})


def test_negative_lambda_rejected():
    with pytest.raises(ConfigError, match="lambda1"):
        config_from_dict({"lambda1": -1.0})


def test_acs_default_scales_with_grid():
    assert config_from_dict({"N_y": 64}).acs == 4
    assert config_from_dict({"N_y": 384}).acs == 24


def test_default_phantom_has_five_regions():
    regions = default_phantom_regions()
    assert len(regions) == 5
    assert sorted(r.t1rho_ms for r in regions) == [40.0, 55.0, 65.0, 80.0, 100.0]
    for r in regions:
        assert all(abs(c) + max(r.axes) <= 1.0 for c in r.center)


def test_phantom_region_outside_fov_rejected():
    bad = {"phantom_regions": [
        {"center": [0.9, 0.0], "axes": [0.5, 0.5], "m0": 1.0, "t1rho_ms": 50.0}
    ]}
    with pytest.raises(ConfigError, match="field of view"):
        config_from_dict(bad)


def test_zero_t1rho_region_rejected():
    bad = {"phantom_regions": [
        {"center": [0.0, 0.0], "axes": [0.5, 0.5], "m0": 1.0, "t1rho_ms": 0.0}
    ]}
    with pytest.raises(ConfigError, match="t1rho_ms"):
        config_from_dict(bad)


def test_save_load_roundtrip(tmp_path):
    cfg = config_from_dict({"R": 10, "N_x": 32, "N_y": 32, "mode": "sc"})
    p = tmp_path / "saved.json"
    save_config(cfg, p)
    assert load_config(p) == cfg


def test_invalid_json_reported(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(p)

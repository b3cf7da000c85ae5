import json

import pytest

from gwlab.config import DEFAULT_SECTIONS, RunConfig, load_config
from gwlab.presets import PRESETS


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_roundtrip(name):
    cfg = load_config(preset_name=name, overrides={"ulam": {"m": 4096}, "seed": 7})
    again = RunConfig.from_dict(json.loads(cfg.canonical_json()))
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_layering(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"preset": "nonlinear", "ulam": {"m": 2048}, "clt": {"n_samples": 10}}))
    cfg = load_config(str(path), overrides={"clt": {"n_samples": 20}})
    assert cfg.preset == "nonlinear"
    assert cfg["ulam"]["m"] == 2048 and cfg["ulam"]["tol"] == DEFAULT_SECTIONS["ulam"]["tol"]
    assert cfg["clt"]["n_samples"] == 20
    # explicit map fields override the preset field by field
    cfg = load_config(preset_name="nonlinear", overrides={"map": {"degree": 3}})
    assert cfg.map.degree == 3 and cfg.map.perturbation == PRESETS["nonlinear"][0].perturbation


def test_default_preset_and_digest_changes():
    a = load_config()
    assert a.preset == "classic"
    b = load_config(overrides={"seed": 2})
    assert a.digest() != b.digest()


def test_rejects_bad_configs(tmp_path):
    with pytest.raises(ValueError):
        load_config(overrides={"ulam": {"cells": 3}})
    with pytest.raises(ValueError):
        load_config(overrides={"plotting": {}})
    with pytest.raises(KeyError):
        load_config(preset_name="nope")
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(ValueError):
        load_config(str(path))

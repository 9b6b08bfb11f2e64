import json

import pytest

from dertrust.config import EngineConfig
from dertrust.experience import ConfigError


def test_roundtrip(tmp_path):
    cfg = EngineConfig().override(alpha=0.1, d=0.9, decay_epoch=50)
    path = tmp_path / "c.json"
    cfg.save(path)
    assert EngineConfig.load(path) == cfg


def test_unknown_keys_rejected():
    d = EngineConfig().to_dict()
    d["bogus"] = 1
    with pytest.raises(ConfigError):
        EngineConfig.from_dict(d)
    d = EngineConfig().to_dict()
    d["experience"]["foo"] = 1
    with pytest.raises(ConfigError):
        EngineConfig.from_dict(d)


def test_schema_version_required():
    with pytest.raises(ConfigError):
        EngineConfig.from_dict({"theta": 0.5})


def test_invalid_values():
    d = EngineConfig().to_dict()
    d["reputation"]["d"] = 2.0
    with pytest.raises(ConfigError):
        EngineConfig.from_dict(d)


def test_override_precedence():
    cfg = EngineConfig.from_dict({"schema_version": 1, "experience": {"alpha": 0.1}})
    assert cfg.experience.alpha == 0.1
    assert cfg.override(alpha=None).experience.alpha == 0.1
    assert cfg.override(alpha=0.2).experience.alpha == 0.2
    assert cfg.override(w1=0.7).weights == (0.7, pytest.approx(0.3))


def test_dumps_is_json():
    assert json.loads(EngineConfig().dumps())["schema_version"] == 1

import io
import json
import sys

import pytest

import config
from config import Config
from errors import UsageError


def test_defaults_are_consistent():
    assert 0 < config.EPS < config.EPS0
    assert config.SAMPLE_BLOCK >= 1
    assert config.MODULE_CAP >= 16


def test_from_dict_round_trip():
    cfg = Config.from_dict({"ring": "Z/4", "entry": "0:1/2,1:1/2", "n_values": [2, 3, 4], "samples": 100})
    assert cfg.to_dict() == {"ring": "Z/4", "entry": "0:1/2,1:1/2", "n_values": [2, 3, 4], "samples": 100}


@pytest.mark.parametrize("data", [
    {"bogus": 1},
    {"samples": 0},
    {"workers": "2"},
    {"u": 1.5},
    {"n_values": []},
    {"n_values": [2, 0]},
    {"invariant": "rank"},
    {"eps": "abc"},
    {"eps": "1/5", "eps0": "1/10"},
])
def test_from_dict_rejects(data):
    with pytest.raises(UsageError):
        Config.from_dict(data)


def test_from_json(tmp_path):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps({"ring": "Z/8", "seed": 3}))
    cfg = Config.from_json(str(path))
    assert (cfg.ring, cfg.seed) == ("Z/8", 3)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(UsageError):
        Config.from_json(str(bad))
    bad.write_text("[1, 2]")
    with pytest.raises(UsageError):
        Config.from_json(str(bad))
    with pytest.raises(UsageError):
        Config.from_json(str(tmp_path / "missing.json"))


def test_progress_passes_items_through(monkeypatch):
    monkeypatch.setattr(config, "QUIET", True)
    assert list(config.progress(range(4), desc="test")) == [0, 1, 2, 3]


def test_progress_silent_off_terminal(monkeypatch):
    monkeypatch.setattr(config, "QUIET", False)
    monkeypatch.setattr(sys, "stderr", io.StringIO())
    bar = config.progress(range(3), desc="test")
    assert bar.disable
    assert list(bar) == [0, 1, 2]
    assert sys.stderr.getvalue() == ""

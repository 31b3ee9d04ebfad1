import json

import numpy as np
import pytest

from tangent_lens.config import FIXTURES, ConfigError, load_config, parse_config, serialize


def base_doc():
    return {
        "name": "t",
        "maps": [{"matrix": [[0.5, 0], [0, 0.4]], "translation": [0, 0]},
                 {"matrix": [[0.5, 0], [0, 0.4]], "translation": [0.5, 0.6]}],
        "weights": ["1/2", "1/2"],
        "point": {"prefix": [1, 2], "tail": 1},
        "scales": [0.1, 0.01],
    }


def test_fixture_example_4_2():
    cfg, raw = load_config("example-4-2")
    ifs = cfg.ifs()
    assert ifs.m == 4 and ifs.is_diagonal
    assert cfg.bernoulli().p == pytest.approx((1 / 6, 1 / 3, 1 / 3, 1 / 6), abs=1e-15)
    assert cfg.K == 3 and cfg.scales == [1, 0.04, 0.005, 0.0003]
    assert json.loads(raw)["point"]["coordinates"] == [0.453846, 0.486659]


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_round_trip(name):
    cfg, _ = load_config(name)
    again = parse_config(serialize(cfg))
    assert serialize(again) == serialize(cfg)
    assert again == cfg


@pytest.mark.parametrize("path,mutate,msg", [
    ("maps[0]", lambda d: d["maps"][0].update(matrix=[[1.2, 0], [0, 0.5]]), "not contractive"),
    ("maps[1]", lambda d: d["maps"][1].update(matrix=[[0.5, 0.5], [0.5, 0.5]]), "singular"),
    ("scales", lambda d: d.update(scales=[]), "non-empty"),
    ("scales[1]", lambda d: d.update(scales=[0.1, 0.2]), "strictly decreasing"),
    ("weights", lambda d: d.update(weights=[0.5, 0.6]), "sum"),
    ("point.tail", lambda d: d["point"].update(tail=3), "out of range"),
    ("maps[0].translation[1]", lambda d: d["maps"][0].update(translation=[0, "x"]), "number"),
    ("K", lambda d: d.update(K=-1), ">= 0"),
])
def test_config_errors_carry_field_path(path, mutate, msg):
    doc = base_doc()
    mutate(doc)
    with pytest.raises(ConfigError, match=msg) as exc:
        parse_config(json.dumps(doc))
    assert exc.value.path == path


def test_malformed_and_non_finite():
    with pytest.raises(ConfigError, match="malformed"):
        parse_config("{not json")
    doc = base_doc()
    doc["maps"][0]["translation"] = [float("nan"), 0]
    with pytest.raises(ConfigError, match="finite"):
        parse_config(json.dumps(doc))
    with pytest.raises(ConfigError):
        load_config("no-such-thing")


def test_extra_keys_survive():
    doc = base_doc()
    doc["note"] = "kept"
    cfg = parse_config(doc)
    assert json.loads(serialize(cfg))["note"] == "kept"


def test_coordinates_are_snapped():
    cfg, _ = load_config("example-4-2")
    addr, d = cfg.address(cfg.ifs())
    assert d < 1e-6
    assert np.hypot(*(addr.point(cfg.ifs()) - [0.453846, 0.486659])) == pytest.approx(d)

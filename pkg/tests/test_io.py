import json

import pytest

from ringbalance.io import (
    assignment_from_dict,
    assignment_to_dict,
    dump_instance,
    instance_from_dict,
    load_instance,
    parse_delay,
    ratio_value,
)
from ringbalance.model import Assignment
from ringbalance.sim import TableDelay, UniformDelay, UnitDelay


def test_instance_round_trip(ex1, tmp_path):
    path = tmp_path / "i.json"
    path.write_text(dump_instance(ex1))
    back = load_instance(path)
    assert back == ex1


def test_declared_shape_must_match():
    with pytest.raises(ValueError):
        instance_from_dict({"n": 3, "q": [[1, 2], [3, 4]]})
    with pytest.raises(ValueError):
        instance_from_dict({"rows": []})


def test_assignment_round_trip():
    a = Assignment.of([1, 0, 2])
    assert assignment_from_dict(json.loads(json.dumps(assignment_to_dict(a)))) == a


def test_ratio_value():
    assert ratio_value(float("inf")) == "inf"
    assert ratio_value(1) == 1.0


def test_parse_delay(tmp_path):
    assert isinstance(parse_delay("unit"), UnitDelay)
    assert parse_delay("uniform:1,5", 3) == UniformDelay(1, 5, 3)
    table = tmp_path / "d.json"
    table.write_text(json.dumps({"0,1": 7, "default": 2}))
    delay = parse_delay(f"table:{table}")
    assert isinstance(delay, TableDelay) and delay.default == 2
    with pytest.raises(ValueError):
        parse_delay("gamma")

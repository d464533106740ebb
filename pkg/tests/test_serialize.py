import json
import math
import os
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qe3d import serialize
from qe3d.ode import EtaProfile, integrate


def test_keys_sorted_and_trailing_newline():
    text = serialize.dumps({"b": 1, "a": {"d": 2.5, "c": [1, 2]}})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert text.index('"c"') < text.index('"d"')


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip_is_exact(x):
    assert json.loads(serialize.dumps({"x": x}))["x"] == x


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_becomes_null(bad):
    assert json.loads(serialize.dumps({"x": bad}))["x"] is None


def test_numpy_and_fraction_values():
    data = {"arr": np.array([1.0, 2.0]), "i": np.int64(3), "b": np.bool_(True), "f": Fraction(1, 4), "t": (1, 2)}
    out = json.loads(serialize.dumps(data))
    assert out == {"arr": [1.0, 2.0], "i": 3, "b": True, "f": 0.25, "t": [1, 2]}


def test_unserializable_type_raises():
    with pytest.raises(TypeError):
        serialize.dumps({"x": object()})


def test_envelope_has_schema_version():
    env = serialize.envelope("demo", {"value": 1})
    assert env == {"schema_version": serialize.SCHEMA_VERSION, "kind": "demo", "value": 1}


def test_write_atomic_replaces_and_cleans_up(tmp_path):
    target = tmp_path / "out.json"
    serialize.write_atomic(target, "first\n")
    serialize.write_atomic(target, "second\n")
    assert target.read_text() == "second\n"
    assert os.listdir(tmp_path) == ["out.json"]


def test_write_atomic_failure_keeps_old_file(tmp_path):
    target = tmp_path / "out.json"
    target.write_text("old")
    with pytest.raises(TypeError):
        serialize.write_atomic(target, 123)  # not text
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["out.json"]


def test_solution_csv_columns_and_thinning():
    sol = integrate(EtaProfile(0.0, 2, level=0.0), (1.0, 0.0), step=0.1, span=(-0.5, 0.5))
    text = serialize.solution_csv(sol, every=2)
    rows = text.splitlines()
    assert rows[0] == "s,value,d1,d2,drift"
    assert len(rows) - 1 == len(sol.s[::2])


def test_records_csv_flattens():
    text = serialize.records_csv([{"a": {"b": 1.5}, "c": True}, {"a": {"b": 2.0}, "d": None}])
    lines = text.splitlines()
    assert lines[0] == "a.b,c,d"
    assert lines[1] == "1.5,true,"
    assert lines[2] == "2,,"

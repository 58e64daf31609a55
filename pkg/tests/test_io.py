import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from circle_conjugacy import io
from circle_conjugacy.circle_core import Blended, ClosedForm, PWAffine, Rotation
from circle_conjugacy.errors import InputError
from circle_conjugacy.fixtures import conjugated_rotation
from circle_conjugacy.rotation_combinatorics import golden

XS = np.linspace(0, 1, 257)


def roundtrip(f):
    return io.map_from_json(json.loads(io.dumps(f.to_json())))


@pytest.mark.parametrize("f", [
    Rotation(0.3),
    ClosedForm("two_mode", t=0.1, c1=0.2, c2=0.1),
    PWAffine([0.0, 0.3, 0.7], [0.1, 0.3, 0.5]),
    Blended(PWAffine([0.0, 0.5], [0.0, 0.25]), [(0.5, 0.01), (0.0, 0.02)]),
    conjugated_rotation().f,
])
def test_map_roundtrip(f):
    g = roundtrip(f)
    assert np.array_equal(f.lift(XS), g.lift(XS))


def test_denjoy_roundtrip(denjoy_fixture):
    g = roundtrip(denjoy_fixture)
    assert np.array_equal(denjoy_fixture.lift(XS), g.lift(XS))


@pytest.mark.parametrize("spec", [{}, {"type": "nope"}, {"type": "rotation"},
                                  {"type": "closed_form", "family": "zzz"},
                                  {"type": "closed_form", "family": "arnold", "t": 0.1}, [1, 2]])
def test_bad_specs(spec):
    with pytest.raises(InputError):
        io.map_from_json(spec)


def test_parse_alpha_forms():
    g = golden()
    assert io.parse_alpha("golden").fixed == g.fixed
    assert io.parse_alpha([1] * 90).fixed == pytest.approx(g.fixed, rel=1e-25)
    assert io.parse_alpha({"continued_fraction": [2, 2, 2]}).continued_fraction == (2, 2, 2)
    assert float(io.parse_alpha(0.25)) == 0.25
    with pytest.raises(InputError):
        io.parse_alpha("not a number")


@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_float_alpha_is_exact(v):
    assert float(io.parse_alpha(v).value) == v


def test_dumps_deterministic():
    obj = {"b": np.float64(0.1), "a": np.arange(3), "c": Rotation(0.2)}
    assert io.dumps(obj) == io.dumps(dict(reversed(list(obj.items()))))
    assert json.loads(io.dumps(obj))["a"] == [0, 1, 2]
    with pytest.raises(TypeError):
        io.dumps({"x": object()})


def test_load_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InputError):
        io.load_json(p)
    with pytest.raises(InputError):
        io.load_map(tmp_path / "missing.json")

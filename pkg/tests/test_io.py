import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from spinelab.io import atomic_write, csv_table, dumps, fmt, sha256_file


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_has_twelve_significant_digits(v):
    text = fmt(v)
    assert float(text) == float(f"{v:.12g}")
    assert math.isclose(float(text), v, rel_tol=1e-11, abs_tol=0)


def test_fmt_specials():
    assert [fmt(v) for v in (float("nan"), float("inf"), -float("inf"), 0.0, -0.0)] == ["nan", "inf", "-inf", "0", "0"]


@given(st.recursive(
    st.none() | st.booleans() | st.integers(-10**6, 10**6) | st.floats(allow_nan=False, allow_infinity=False) | st.text(max_size=5),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=4), inner, max_size=4),
    max_leaves=15,
))
def test_dumps_is_valid_json(obj):
    back = json.loads(dumps(obj))
    assert json.loads(dumps(back)) == back


def test_dumps_sorted_and_numpy():
    text = dumps({"b": np.array([1.0, 2.5]), "a": np.float64(1 / 3), "c": np.int64(4), "d": np.bool_(True)})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": 0.333333333333, "b": [1, 2.5], "c": 4, "d": True}
    assert "NaN" in dumps([float("nan")])


def test_atomic_write_hash(tmp_path):
    digest = atomic_write(tmp_path / "sub" / "x.json", "abc\n")
    assert digest == sha256_file(tmp_path / "sub" / "x.json")
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["x.json"]


def test_csv_table():
    assert csv_table(["a", "b"], [[1, 0.1], ["x", 2.0]]) == "a,b\n1,0.1\nx,2\n"

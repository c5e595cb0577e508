import json

import numpy as np
import pytest
from hypothesis import given

from conftest import metrics
from metricfactor import ScaleSet
from metricfactor.spacefile import SpaceDoc, SpaceFileError, load, load_csv, loads, save


@given(metrics(max_size=12))
def test_json_round_trip_is_exact(m):
    doc = loads(SpaceDoc(m, {"F": m.labels[:1]}, ScaleSet.geometric(0.5)).dumps())
    assert doc.space.labels == m.labels
    assert doc.space.dist.tobytes() == m.dist.tobytes()
    assert doc.subsets == {"F": m.labels[:1]}
    assert doc.scale_set == ScaleSet.geometric(0.5)


def _doc(**over):
    base = {"format_version": 1, "labels": ["a", "b"], "matrix": [[0, 1], [1, 0]]}
    base.update(over)
    return json.dumps(base)


@pytest.mark.parametrize(
    "text,fragment",
    [
        (_doc(matrix=[[0, 1], [1, "x"]]), "row 1, column 1"),
        (_doc(matrix=[[0, 1], [1]]), "row 1"),
        (_doc(matrix=[[0, 1]]), "1 rows"),
        (_doc(matrix=[[0, -1], [1, 0]]), "row 0, column 1"),
        (_doc(labels=["a", "a"]), "distinct"),
        (_doc(format_version=2), "format_version"),
        (_doc(subsets={"F": ["z"]}), "unknown labels"),
        ("{not json", "line 1"),
    ],
)
def test_malformed_json(text, fragment):
    with pytest.raises(SpaceFileError, match=fragment):
        loads(text)


def test_csv_with_and_without_header():
    doc = load_csv("a,b\n0,2\n2,0\n")
    assert doc.space.labels == ("a", "b") and doc.space.d("a", "b") == 2
    assert load_csv("0,2\n2,0\n").space.labels == ("p0", "p1")
    with pytest.raises(SpaceFileError, match="row 1, column 0"):
        load_csv("0,2\nq,0\n")


def test_extra_keys_survive(tmp_path):
    path = tmp_path / "s.json"
    m = loads(_doc()).space
    save(SpaceDoc(m, extra={"projection": {"a": "a"}}), str(path))
    assert load(str(path)).extra == {"projection": {"a": "a"}}
    assert np.array_equal(load(str(path)).space.dist, m.dist)


def test_missing_file():
    with pytest.raises(SpaceFileError, match="cannot read"):
        load("/nonexistent/space.json")

import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import metrics, points_on_line, space, ultrametrics, with_subset
from metricfactor import DomainError, retract_bdhm, retract_engelking, rho, verify_retraction
from metricfactor.retraction import annulus_index, star_set


def test_line_trace_by_hand():
    m = points_on_line([0, 0.3, 1.0], ["p0", "p03", "p1"])
    r = retract_engelking(m, ["p0"])
    t = r.trace
    assert t.i_range == (0, 1)
    assert t.U[0] == ("p1",)
    assert t.U[1] == ("p03",)
    assert r.mapping == {"p0": "p0", "p03": "p0", "p1": "p0"}
    assert m.d("p03", r.mapping["p03"]) <= 17 * 0.3
    assert verify_retraction(m, ["p0"], r).passed


@pytest.mark.parametrize("rho_x,index", [(1.0, 0), (0.6, 0), (0.5, 1), (0.3, 1), (0.25, 2), (0.2, 2), (2**-10, 10)])
def test_annulus_index(rho_x, index):
    # annulus 0 is rho > 1/2, annulus i >= 1 is 2^-(i+1) < rho <= 2^-i
    assert annulus_index(rho_x) == index


def test_identity_when_subset_is_everything():
    m = points_on_line([0, 1, 5])
    assert retract_engelking(m, m.labels).mapping == {x: x for x in m.labels}


def test_constant_on_singleton():
    m = points_on_line([0, 1, 5, 9])
    assert set(retract_engelking(m, ["x2"]).mapping.values()) == {"x2"}


def test_empty_subset_rejected():
    with pytest.raises(DomainError):
        retract_engelking(points_on_line([0, 1]), [])


@given(with_subset(metrics(max_size=14)))
def test_engelking_certificates(case):
    m, F = case
    rep = verify_retraction(m, F, retract_engelking(m, F))
    assert rep.passed, rep.as_dict()


@given(with_subset(metrics(max_size=14)))
def test_engelking_displacement_is_bounded(case):
    m, F = case
    r = retract_engelking(m, F)
    dist = rho(m, F)
    for i, x in enumerate(m.labels):
        assert m.d(x, r.mapping[x]) <= 17 * dist[i] * (1 + 1e-9)


def test_bdhm_example():
    m = space("abx", [[0, 4, 1], [4, 0, 4], [1, 4, 0]])
    assert star_set(m, ["a", "b"], "x", 2) == ("a",)
    r = retract_bdhm(m, ["a", "b"], 2)
    assert r.mapping == {"a": "a", "b": "b", "x": "a"}


def test_bdhm_tie_goes_to_first_label():
    m = space("abx", [[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    assert star_set(m, ["a", "b"], "x", 1.5) == ("a", "b")
    assert retract_bdhm(m, ["a", "b"], 1.5).mapping["x"] == "a"
    # ties follow the label order of the space, not the order the subset was listed in
    assert retract_bdhm(m, ["b", "a"], 1.5).mapping["x"] == "a"


def test_bdhm_rejections():
    m = space("abx", [[0, 4, 1], [4, 0, 4], [1, 4, 0]])
    with pytest.raises(DomainError):
        retract_bdhm(m, ["a"], 1.0)
    with pytest.raises(DomainError):
        retract_bdhm(points_on_line([0, 1, 2]), ["x0"], 2)


@given(with_subset(ultrametrics(max_size=14)), st.sampled_from([1.5, 2.0, 4.0]))
def test_bdhm_certificates(case, tau):
    m, F = case
    r = retract_bdhm(m, F, tau)
    rep = verify_retraction(m, F, r)
    assert rep.passed, rep.as_dict()
    for a in F:
        assert r.mapping[a] == a


def test_farthest_point_map_fails_sr():
    m = points_on_line([0, 1, 10, 10.5], ["a", "b", "c", "x"])
    F = ["a", "c"]
    good = retract_engelking(m, F)
    bad = dataclasses.replace(good, mapping={**good.mapping, "x": "a"})
    rep = verify_retraction(m, F, bad)
    assert not rep.passed
    sr = rep.get("sr_bound")
    assert not sr.passed
    assert sr.counterexample[0] == "x"
    assert sr.worst_slack < 0


def test_certificate_report_serialises():
    m = points_on_line(np.linspace(0, 1, 6))
    d = verify_retraction(m, ["x0"], retract_engelking(m, ["x0"])).as_dict()
    assert d["method"] == "engelking" and d["passed"]
    assert {c["name"] for c in d["certificates"]} >= {"sr_bound", "sr_17_rho", "d_net_containment"}

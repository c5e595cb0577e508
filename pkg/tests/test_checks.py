import json

import pytest

from metricfactor import checks
from metricfactor.retraction import retract_engelking
from metricfactor.spacefile import loads


def farthest_point_retraction(m, F):
    r = retract_engelking(m, F)
    far = {x: max(F, key=lambda a: m.d(x, a)) for x in m.labels if x not in F}
    return type(r)(r.subset, {**r.mapping, **far}, r.method, r.tau, r.trace)


@pytest.mark.parametrize("suite", sorted(checks.SUITES))
def test_suites_pass_on_a_small_battery(suite):
    res = checks.run_suite(suite, instances=15, seed=3, size=12)
    assert res.passed, res.report
    assert res.counterexample is None


def test_reports_are_byte_identical():
    a = checks.run_suite("quotient-laws", instances=10, seed=11, size=10).dumps()
    b = checks.run_suite("quotient-laws", instances=10, seed=11, size=10).dumps()
    c = checks.run_suite("quotient-laws", instances=10, seed=11, size=10, jobs=2).dumps()
    assert a == b == c
    assert json.loads(a)["seed"] == 11


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv(checks.SEED_ENV, "99")
    assert checks.run_suite("quotient-laws", instances=2, size=5).report["seed"] == 99
    monkeypatch.delenv(checks.SEED_ENV)
    assert checks.default_seed() == checks.DEFAULT_SEED


def test_injected_fault_is_caught_and_shrunk(monkeypatch):
    monkeypatch.setattr(checks, "retract_engelking", farthest_point_retraction)
    res = checks.run_suite("retraction-certificates", instances=30, seed=5, size=15)
    assert not res.passed
    cex = res.report["first_counterexample"]
    assert any(f["check"].startswith("engelking:sr") for f in cex["failures"])
    # a farthest-point violation needs at most two subset points and one outsider
    assert cex["points"] <= 3
    doc = loads(res.counterexample.dumps())
    assert checks.replay("retraction-certificates", doc)
    monkeypatch.undo()
    assert checks.replay("retraction-certificates", doc) == []


def test_instances_are_reproducible():
    a, b = checks.make_instance(42, 20), checks.make_instance(42, 20)
    assert a.space.dist.tobytes() == b.space.dist.tobytes()
    assert a.subset == b.subset and len(a.subset) >= 1


def test_unknown_suite():
    with pytest.raises(KeyError):
        checks.run_suite("nope")

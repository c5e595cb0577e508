import dataclasses
import itertools

import numpy as np
import pytest
from hypothesis import given

from conftest import metrics, space, with_subset
from metricfactor import DomainError, FinMetricSpace, check_quotient_laws, quotient, random_metric, rho, validate_metric
from metricfactor.quotient import THETA, fresh_theta


def three(bc):
    return space("abc", [[0, 1, 2], [1, 0, bc], [2, bc, 0]])


def test_direct_evaluation():
    q = quotient(three(2.5), ["a"])
    s = q.space
    assert s.d("b", "c") == 2.5
    assert s.d("b", q.theta) == 1
    assert s.d("c", q.theta) == 2


def test_shortcut_through_subset():
    q = quotient(three(4), ["a"])
    assert q.space.d("b", "c") == 3


def test_whole_space_collapses_to_theta():
    m = three(2.5)
    q = quotient(m, m.labels)
    assert q.space.labels == (q.theta,)
    assert set(q.projection.values()) == {q.theta}


def test_theta_is_last_and_fresh():
    m = space([THETA, "b"], [[0, 1], [1, 0]])
    q = quotient(m, ["b"])
    assert q.theta != THETA and q.theta.startswith(THETA)
    assert q.space.labels[-1] == q.theta
    assert fresh_theta(["x"]) == THETA


def test_empty_subset_rejected():
    with pytest.raises(DomainError):
        quotient(three(2.5), [])


@given(with_subset(metrics(max_size=10)))
def test_laws_hold(case):
    m, F = case
    q = quotient(m, F)
    rep = check_quotient_laws(q, m, F)
    assert rep.ok, rep.failures


@given(with_subset(metrics(max_size=10)))
def test_min_formula_against_oracle(case):
    m, F = case
    q = quotient(m, F)
    r = {x: float(v) for x, v in zip(m.labels, rho(m, F))}
    for x, y in itertools.combinations(m.labels, 2):
        px, py = q.projection[x], q.projection[y]
        if px == py:
            continue
        if px == q.theta or py == q.theta:
            want = r[y if px == q.theta else x]
        else:
            want = min(m.d(x, y), r[x] + r[y])
        assert q.space.d(px, py) == pytest.approx(want, rel=1e-9, abs=0)
        # the projection never stretches
        assert q.space.d(px, py) <= m.d(x, y) * (1 + 1e-9)


def test_fifty_twenty_point_instances():
    for seed in range(50):
        m = random_metric(20, seed)
        F = m.labels[: 1 + seed % 7]
        assert check_quotient_laws(quotient(m, F), m, F).ok


def test_injected_asymmetry_is_reported():
    m = three(2.5)
    q = quotient(m, ["a"])
    bad = q.space.dist.copy()
    bad[0, 1] += 0.5
    broken = dataclasses.replace(q, space=FinMetricSpace(q.space.labels, bad))
    rep = check_quotient_laws(broken, m, ["a"])
    assert not rep.ok
    sym = [f for f in rep.failures if f["law"] == "metric"]
    assert sym and set(sym[0]["labels"]) == {"b", "c"}
    assert "symmetry" in sym[0]["detail"]


def test_quotient_of_ultrametric_stays_metric():
    m = space("abx", [[0, 4, 1], [4, 0, 4], [1, 4, 0]])
    assert validate_metric(quotient(m, ["a"]).space).is_metric
    assert np.all(quotient(m, ["a", "b"]).space.dist >= 0)

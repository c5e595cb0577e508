import itertools
import sys

import numpy as np
from hypothesis import settings, strategies as st

from metricfactor import FinMetricSpace, random_metric, random_ultra

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def space(labels, rows):
    return FinMetricSpace(tuple(labels), np.array(rows, dtype=float))


def points_on_line(coords, labels=None):
    c = np.array(coords, dtype=float)
    labels = labels or [f"x{i}" for i in range(len(c))]
    return FinMetricSpace(tuple(labels), np.abs(c[:, None] - c[None, :]))


@st.composite
def metrics(draw, min_size=1, max_size=9):
    n = draw(st.integers(min_size, max_size))
    seed = draw(st.integers(0, 2**32))
    if draw(st.booleans()):
        return random_ultra(n, seed, draw(st.sampled_from([2.0, 3.0])))
    return random_metric(n, seed, draw(st.integers(1, 3)))


@st.composite
def ultrametrics(draw, min_size=1, max_size=9):
    n = draw(st.integers(min_size, max_size))
    return random_ultra(n, draw(st.integers(0, 2**32)), draw(st.sampled_from([2.0, 3.0])))


@st.composite
def with_subset(draw, base):
    m = draw(base)
    k = draw(st.integers(1, len(m)))
    F = draw(st.permutations(m.labels).map(lambda p: tuple(p[:k])))
    return m, F


# brute-force oracles, kept deliberately naive


def brute_cover(m, r):
    n = len(m)
    for k in range(1, n + 1):
        for centers in itertools.combinations(range(n), k):
            if all(any(m.dist[c, j] <= r for c in centers) for j in range(n)):
                return k
    return n


def brute_packing(m, r):
    n = len(m)
    for k in range(n, 0, -1):
        for pts in itertools.combinations(range(n), k):
            if all(m.dist[i, j] >= r for i, j in itertools.combinations(pts, 2)):
                return k
    return 1


def brute_triangle_ok(m):
    d = m.dist
    n = len(m)
    for i, j, k in itertools.product(range(n), repeat=3):
        if d[i, j] > (d[i, k] + d[k, j]) * (1 + 1e-9) + 1e-12:
            return False
    return True


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)

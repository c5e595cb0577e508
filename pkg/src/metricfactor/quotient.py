"""Collapse a subset F of a finite metric space to a single point."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import FinMetricSpace, Label, close, le, rho, validate_metric
from .errors import DomainError

THETA = "__theta__"


def fresh_theta(labels: Iterable[Label]) -> str:
    taken = set(labels)
    if THETA not in taken:
        return THETA
    k = 1
    while f"{THETA}{k}" in taken:
        k += 1
    return f"{THETA}{k}"


@dataclass(frozen=True, eq=False)
class QuotientSpace:
    base_labels: tuple
    subset: tuple
    theta: str
    space: FinMetricSpace
    projection: dict = field(repr=False)

    def project(self, x: Label) -> Label:
        return self.projection[x]


def quotient(m: FinMetricSpace, F: Iterable[Label]) -> QuotientSpace:
    """Quotient ``X/F`` with ``d~(x, y) = min(d(x, y), rho_F(x) + rho_F(y))``.

    The collapsed point sits last in the label order; its distance to ``x`` is
    ``rho_F(x)``.
    """
    F = m.ordered_subset(F)
    if not F:
        raise DomainError("F must be non-empty")
    r = rho(m, F)
    in_f = set(F)
    keep = [i for i, lab in enumerate(m.labels) if lab not in in_f]
    theta = fresh_theta(m.labels)
    k = len(keep)
    dist = np.zeros((k + 1, k + 1))
    if k:
        sub = m.dist[np.ix_(keep, keep)]
        rk = r[keep]
        dist[:k, :k] = np.minimum(sub, rk[:, None] + rk[None, :])
        np.fill_diagonal(dist[:k, :k], 0.0)
        dist[:k, k] = rk
        dist[k, :k] = rk
    labels = tuple(m.labels[i] for i in keep) + (theta,)
    proj = {lab: (theta if lab in in_f else lab) for lab in m.labels}
    return QuotientSpace(m.labels, F, theta, FinMetricSpace(labels, dist), proj)


@dataclass
class QuotientLawReport:
    ok: bool = True
    failures: list = field(default_factory=list)

    def fail(self, law: str, labels: tuple, detail: str) -> None:
        self.ok = False
        self.failures.append({"law": law, "labels": [str(x) for x in labels], "detail": detail})


def check_quotient_laws(q: QuotientSpace, m: FinMetricSpace, F: Iterable[Label]) -> QuotientLawReport:
    """Re-derive every quotient invariant from ``(m, F)`` and compare with ``q``."""
    rep = QuotientLawReport()
    F = m.ordered_subset(F)
    in_f = set(F)
    r = rho(m, F)
    qs = q.space
    v = validate_metric(qs)
    if not v.is_metric:
        w = v.worst_violation
        rep.fail("metric", w.labels, f"{w.kind} violated, slack {w.slack:.3g}")
    for x in m.labels:
        want = q.theta if x in in_f else x
        if q.projection.get(x) != want:
            rep.fail("projection", (x,), f"maps to {q.projection.get(x)!r}, expected {want!r}")
    if q.theta not in qs:
        rep.fail("theta", (q.theta,), "collapsed point missing from the quotient")
        return rep
    for i, x in enumerate(m.labels):
        if x in in_f or x not in qs:
            continue
        got = qs.d(x, q.theta)
        if not close(got, float(r[i])):
            rep.fail("distance_to_theta", (x, q.theta), f"{got!r} != rho_F = {float(r[i])!r}")
    outside = [i for i, lab in enumerate(m.labels) if lab not in in_f and lab in qs]
    for a, i in enumerate(outside):
        for j in outside[a + 1:]:
            x, y = m.labels[i], m.labels[j]
            want = min(float(m.dist[i, j]), float(r[i] + r[j]))
            got = qs.d(x, y)
            if not close(got, want):
                rep.fail("min_formula", (x, y), f"{got!r} != {want!r}")
    for i, x in enumerate(m.labels):
        for j in range(i + 1, len(m)):
            y = m.labels[j]
            px, py = q.projection.get(x), q.projection.get(y)
            if px not in qs or py not in qs:
                continue
            if not le(qs.d(px, py), float(m.dist[i, j])):
                rep.fail("lipschitz", (x, y), f"{qs.d(px, py)!r} > {float(m.dist[i, j])!r}")
    return rep

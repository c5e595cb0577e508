"""Embedding X into F x (X/F) and the metric extension operators built on it.

``Phi(x) = (r(x), pi(x))`` pairs a retraction onto F with the projection to
the quotient.  Pulling back a product metric ``d x v`` along ``Phi`` extends a
metric ``d`` on F to all of X:

* ``extend_l1``   -- ``d(r x, r y) + v(pi x, pi y)``
* ``extend_linf`` -- ``max(d(r x, r y), v(pi x, pi y))``
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, NamedTuple

import numpy as np

from .core import FinMetricSpace, Label, ScaleSet, close, require_metric, scale_ceiling, validate_metric
from .dimension import single_linkage_ultrametric
from .errors import DomainError, StructuralError
from .quotient import QuotientSpace, quotient
from .retraction import Retraction, retract_bdhm, retract_engelking

DEFAULT_TAU = 2.0


@dataclass(frozen=True, eq=False)
class FactorizationContext:
    base: FinMetricSpace
    subset: tuple
    retraction: Retraction
    quotient: QuotientSpace
    factor: FinMetricSpace

    @property
    def labels(self) -> tuple:
        return self.base.labels

    def with_factor(self, v: FinMetricSpace) -> "FactorizationContext":
        if v.labels != self.quotient.space.labels:
            raise StructuralError("factor metric must live on the quotient labels")
        require_metric(v, what="factor metric")
        return replace(self, factor=v)


def build_context(
    base: FinMetricSpace,
    F: Iterable[Label],
    *,
    v: FinMetricSpace | None = None,
    method: str | None = None,
    tau: float = DEFAULT_TAU,
) -> FactorizationContext:
    """Assemble retraction, quotient and factor metric from one auxiliary metric.

    ``method`` defaults to ``"bdhm"`` when ``base`` is an ultrametric and to
    ``"engelking"`` otherwise; ``v`` defaults to the quotient metric itself.
    """
    rep = validate_metric(base)
    if not rep.is_metric:
        raise DomainError(f"auxiliary metric is not a metric: {rep.worst_violation}")
    F = base.ordered_subset(F)
    if not F:
        raise DomainError("F must be non-empty")
    if method is None:
        method = "bdhm" if rep.is_ultrametric else "engelking"
    if method == "bdhm":
        r = retract_bdhm(base, F, tau)
    elif method == "engelking":
        r = retract_engelking(base, F)
    else:
        raise DomainError(f"unknown retraction method {method!r}")
    q = quotient(base, F)
    ctx = FactorizationContext(base, F, r, q, q.space)
    return ctx if v is None else ctx.with_factor(v)


def embed_phi(ctx: FactorizationContext) -> dict:
    """``x -> (r(x), pi(x))`` for every label of X."""
    r, q = ctx.retraction.mapping, ctx.quotient.projection
    return {x: (r[x], q[x]) for x in ctx.labels}


class Pullback(NamedTuple):
    labels: tuple
    matrix: np.ndarray
    is_metric: bool


def pullback(
    f: Mapping | Callable, target: FinMetricSpace, labels: Iterable[Label] | None = None
) -> Pullback:
    """``(f* target)(x, y) = target(f(x), f(y))``.

    The result is only a pseudo-metric when ``f`` is not injective; this is
    reported through ``is_metric`` rather than repaired.
    """
    if labels is None:
        if not isinstance(f, Mapping):
            raise StructuralError("labels are required when f is a callable")
        labels = f.keys()
    labels = tuple(labels)
    get = f.__getitem__ if isinstance(f, Mapping) else f
    images = [get(x) for x in labels]
    bad = [y for y in images if y not in target]
    if bad:
        raise StructuralError(f"map sends points outside the target: {bad[:3]}")
    idx = [target.index(y) for y in images]
    mat = target.dist[np.ix_(idx, idx)].copy()
    return Pullback(labels, mat, len(set(idx)) == len(idx))


def _phi_index(ctx: FactorizationContext, d: FinMetricSpace) -> tuple[list[int], list[int]]:
    if set(d.labels) != set(ctx.subset) or len(d) != len(ctx.subset):
        raise StructuralError("metric to extend must be defined exactly on F")
    phi = embed_phi(ctx)
    v = ctx.factor
    ri = [d.index(phi[x][0]) for x in ctx.labels]
    pi = [v.index(phi[x][1]) for x in ctx.labels]
    return ri, pi


def extend_l1(ctx: FactorizationContext, d: FinMetricSpace) -> FinMetricSpace:
    """Extend ``d`` from F to X through the l1 product with the factor metric."""
    require_metric(d, what="metric on F")
    ri, pi = _phi_index(ctx, d)
    mat = d.dist[np.ix_(ri, ri)] + ctx.factor.dist[np.ix_(pi, pi)]
    return FinMetricSpace(ctx.labels, mat)


def _check_s_valued(m: FinMetricSpace, S: ScaleSet, what: str) -> None:
    n = len(m)
    for v in np.unique(m.dist[np.triu_indices(n, 1)]):
        if not S.contains(float(v)):
            raise DomainError(f"{what} takes value {float(v)!r} outside the scale set")


def extend_linf(ctx: FactorizationContext, d: FinMetricSpace, S: ScaleSet | None = None) -> FinMetricSpace:
    """Extend ``d`` from F to X through the l-infinity product with the factor metric.

    Passing ``S`` requests the value-set contract: the factor metric must be an
    ultrametric with values in ``S`` (checked), and then an S-valued
    ultrametric ``d`` extends to an S-valued ultrametric.
    """
    require_metric(d, what="metric on F")
    if S is not None:
        require_metric(ctx.factor, ultra=True, what="factor metric")
        _check_s_valued(ctx.factor, S, "factor metric")
    ri, pi = _phi_index(ctx, d)
    mat = np.maximum(d.dist[np.ix_(ri, ri)], ctx.factor.dist[np.ix_(pi, pi)])
    return FinMetricSpace(ctx.labels, mat)


def scale_valued_factor(v: FinMetricSpace, S: ScaleSet) -> FinMetricSpace:
    """An S-valued ultrametric on the labels of ``v``.

    Takes the single-linkage ultrametric below ``v`` and rounds every entry up
    into ``S``; rounding up is monotone, so the strong triangle inequality
    survives.
    """
    if not S.characteristic:
        raise DomainError("scale set must be characteristic")
    u = single_linkage_ultrametric(v)
    ceil = np.vectorize(lambda t: scale_ceiling(S, float(t)), otypes=[float])
    return FinMetricSpace(v.labels, ceil(u.dist) if len(v) else u.dist)


def truncate_factor(v: FinMetricSpace, eta: float) -> FinMetricSpace:
    """Pointwise ``min(v, eta)``, still a metric (and still ultra if ``v`` was)."""
    if not eta > 0:
        raise DomainError("eta must be positive")
    return FinMetricSpace(v.labels, np.minimum(v.dist, eta))


def restriction_matches(ext: FinMetricSpace, d: FinMetricSpace) -> bool:
    """Whether ``ext`` restricted to the labels of ``d`` equals ``d``."""
    sub = ext.subspace(d.labels)
    idx = [sub.index(x) for x in d.labels]
    mat = sub.dist[np.ix_(idx, idx)]
    return all(close(float(a), float(b)) for a, b in zip(mat.ravel(), d.dist.ravel()))

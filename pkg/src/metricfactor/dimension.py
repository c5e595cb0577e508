"""Covering and packing numbers, finite-scale dimension estimators and the
sparse-scale ultrametric.

Closed balls are used throughout: ``x`` is covered by a center ``c`` at radius
``r`` when ``d(x, c) <= r`` (up to ``TOL``); a set is ``r``-separated when all
distinct pairs are at distance ``>= r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import TOL, FinMetricSpace, product_metric, require_metric
from .errors import CapacityError, DomainError

EXACT_LIMIT = 20
# 2**-(2**11) underflows a double, so at most 10 distinct merge heights can be remapped
MAX_SPARSE_LEVELS = 10


def _within(dist: np.ndarray, r: float) -> np.ndarray:
    return dist <= r + TOL * np.maximum(dist, r)


def _separated(dist: np.ndarray, r: float) -> np.ndarray:
    return dist + TOL * np.maximum(dist, r) >= r


def _masks(flags: np.ndarray) -> list[int]:
    out = []
    for row in flags:
        mask = 0
        for j in np.flatnonzero(row):
            mask |= 1 << int(j)
        out.append(mask)
    return out


def _resolve_mode(n: int, mode: str) -> str:
    if mode == "auto":
        return "exact" if n <= EXACT_LIMIT else "greedy"
    if mode not in ("exact", "greedy"):
        raise DomainError(f"mode must be exact, greedy or auto, got {mode!r}")
    if mode == "exact" and n > EXACT_LIMIT:
        raise CapacityError(f"exact search is limited to {EXACT_LIMIT} points, got {n}")
    return mode


def greedy_cover(m: FinMetricSpace, r: float) -> list[int]:
    """Max-coverage greedy r-net; ties go to the lowest label index."""
    n = len(m)
    cover = _within(m.dist, r)
    uncovered = np.ones(n, dtype=bool)
    centers = []
    while uncovered.any():
        gains = (cover & uncovered[None, :]).sum(axis=1)
        c = int(np.argmax(gains))
        centers.append(c)
        uncovered &= ~cover[c]
    return centers


def exact_cover(m: FinMetricSpace, r: float) -> list[int]:
    """Minimum r-net by branch and bound over bitmasks."""
    n = len(m)
    if n > EXACT_LIMIT:
        raise CapacityError(f"exact covering is limited to {EXACT_LIMIT} points, got {n}")
    if n == 0:
        return []
    cov = _masks(_within(m.dist, r))
    full = (1 << n) - 1
    best = greedy_cover(m, r)
    best_len = [len(best)]
    best_set = [list(best)]
    max_cov = max(bin(c).count("1") for c in cov)
    # centers able to cover each point, largest balls first
    coverers = [sorted((c for c in range(n) if cov[c] >> u & 1), key=lambda c: -bin(cov[c]).count("1")) for u in range(n)]

    def search(covered: int, chosen: list[int]) -> None:
        if covered == full:
            if len(chosen) < best_len[0]:
                best_len[0] = len(chosen)
                best_set[0] = list(chosen)
            return
        left = n - bin(covered).count("1")
        if len(chosen) + -(-left // max_cov) >= best_len[0]:
            return
        u = (~covered & full & -(~covered & full)).bit_length() - 1
        for c in coverers[u]:
            chosen.append(c)
            search(covered | cov[c], chosen)
            chosen.pop()

    search(0, [])
    return sorted(best_set[0])


def covering_number(m: FinMetricSpace, r: float, mode: str = "exact") -> int:
    """Least number of closed ``r``-balls centred in X that cover X."""
    if not r > 0:
        raise DomainError("r must be positive")
    if len(m) == 0:
        return 0
    mode = _resolve_mode(len(m), mode)
    return len(exact_cover(m, r) if mode == "exact" else greedy_cover(m, r))


def greedy_packing(m: FinMetricSpace, r: float) -> list[int]:
    """Maximal ``r``-separated subset built in label order."""
    sep = _separated(m.dist, r)
    chosen: list[int] = []
    for i in range(len(m)):
        if all(sep[i, j] for j in chosen):
            chosen.append(i)
    return chosen


def exact_packing(m: FinMetricSpace, r: float) -> list[int]:
    """Largest ``r``-separated subset: maximum independent set of the ``< r`` graph."""
    n = len(m)
    if n > EXACT_LIMIT:
        raise CapacityError(f"exact packing is limited to {EXACT_LIMIT} points, got {n}")
    conflict = ~_separated(m.dist, r)
    np.fill_diagonal(conflict, False)
    nbr = _masks(conflict)
    best = [greedy_packing(m, r)]

    def search(cand: int, chosen: list[int]) -> None:
        if len(chosen) + bin(cand).count("1") <= len(best[0]):
            return
        if cand == 0:
            best[0] = list(chosen)
            return
        v = (cand & -cand).bit_length() - 1
        chosen.append(v)
        search(cand & ~nbr[v] & ~(1 << v), chosen)
        chosen.pop()
        search(cand & ~(1 << v), chosen)

    search((1 << n) - 1, [])
    return sorted(best[0])


def packing_number(m: FinMetricSpace, r: float, mode: str = "exact") -> int:
    if not r > 0:
        raise DomainError("r must be positive")
    if len(m) == 0:
        return 0
    mode = _resolve_mode(len(m), mode)
    return len(exact_packing(m, r) if mode == "exact" else greedy_packing(m, r))


@dataclass(frozen=True)
class ScaleProfile:
    scales: tuple
    counts: tuple
    packing: tuple


def scale_profile(m: FinMetricSpace, scales: Iterable[float], mode: str = "auto") -> ScaleProfile:
    scales = tuple(sorted({float(s) for s in scales}, reverse=True))
    return ScaleProfile(
        scales,
        tuple(covering_number(m, s, mode) for s in scales),
        tuple(packing_number(m, s, mode) for s in scales),
    )


def profile_violations(p: ScaleProfile) -> list[str]:
    """Broken profile invariants, empty when all hold."""
    out = []
    for a, b, na, nb in zip(p.scales, p.scales[1:], p.counts, p.counts[1:]):
        if nb < na:
            out.append(f"covering count drops from {na} at r={a!r} to {nb} at r={b!r}")
    for s, n, k in zip(p.scales, p.counts, p.packing):
        if n > k:
            out.append(f"N({s!r}) = {n} exceeds pack({s!r}) = {k}")
    for r, n in zip(p.scales, p.counts):
        for r2, k in zip(p.scales, p.packing):
            if r2 > 2 * r * (1 + 1e-6) and k > n:
                out.append(f"pack({r2!r}) = {k} exceeds N({r!r}) = {n}")
    return out


def default_scales(m: FinMetricSpace, base: float = 2.0) -> list[float]:
    """Powers of ``base`` strictly inside (min positive distance, diameter), largest first.

    When fewer than three fit, the range widens to the closed interval
    ``[min positive distance / base, diameter]`` so tiny spaces still get a grid.
    """
    lo, hi = m.min_positive_distance(), m.diameter
    if hi <= 0:
        return []
    out = _powers_between(lo, hi, base, closed=False)
    if len(out) < 3:
        out = _powers_between(lo / base, hi, base, closed=True)
    return out


def _powers_between(lo: float, hi: float, base: float, closed: bool) -> list[float]:
    out = []
    k = math.floor(math.log(hi, base)) + 1
    while True:
        s = float(base) ** k
        if s < lo * (1 - TOL) or (not closed and s <= lo):
            break
        if s < hi or (closed and s <= hi * (1 + TOL)):
            out.append(s)
        k -= 1
    return out


@dataclass(frozen=True)
class SlopeEstimate:
    value: float
    scales: tuple
    counts: tuple
    residuals: tuple

    def rows(self) -> list[tuple]:
        return list(zip(self.scales, self.counts, self.residuals))


def _check_scales(scales: Sequence[float]) -> list[float]:
    scales = sorted({float(s) for s in scales}, reverse=True)
    if any(s <= 0 for s in scales):
        raise DomainError("scales must be positive")
    if len(scales) < 3:
        raise DomainError("need at least 3 distinct scales")
    if scales[0] / scales[-1] < 4 * (1 - TOL):
        raise DomainError("scales must span at least two octaves (max/min >= 4)")
    return scales


def _slope(scales: list[float], counts: list[int]) -> SlopeEstimate:
    x = -np.log(np.array(scales))
    y = np.log(np.array(counts, dtype=float))
    slope, icept = np.polyfit(x, y, 1)
    res = y - (slope * x + icept)
    return SlopeEstimate(max(0.0, float(slope)), tuple(scales), tuple(counts), tuple(float(v) for v in res))


def ubdim_estimate(m: FinMetricSpace, scales: Sequence[float] | None = None, mode: str = "auto") -> SlopeEstimate:
    """Least-squares slope of ``log N(r)`` against ``-log r``."""
    if len(m) <= 1:
        return SlopeEstimate(0.0, tuple(scales or ()), tuple(1 for _ in scales or ()), tuple(0.0 for _ in scales or ()))
    scales = _check_scales(default_scales(m) if scales is None else scales)
    return _slope(scales, [covering_number(m, s, mode) for s in scales])


def packing_slope_estimate(m: FinMetricSpace, scales: Sequence[float] | None = None, mode: str = "auto") -> SlopeEstimate:
    """Same regression on packing counts; the finite-sample stand-in for packing dimension."""
    if len(m) <= 1:
        return SlopeEstimate(0.0, tuple(scales or ()), tuple(1 for _ in scales or ()), tuple(0.0 for _ in scales or ()))
    scales = _check_scales(default_scales(m) if scales is None else scales)
    return _slope(scales, [packing_number(m, s, mode) for s in scales])


def full_span_pairs(m: FinMetricSpace) -> list[tuple[float, float]]:
    """The standard Assouad pair: the diameter against half the least distance."""
    if len(m) <= 1:
        return []
    return [(m.diameter, m.min_positive_distance() / 2)]


@dataclass(frozen=True)
class AssouadEstimate:
    value: float
    center: object = None
    R: float | None = None
    r: float | None = None
    count: int | None = None
    table: tuple = field(default=(), repr=False)


def ball_covering_number(m: FinMetricSpace, x, R: float, r: float, mode: str = "auto") -> int:
    ball = [lab for lab, d in zip(m.labels, m.dist[m.index(x)]) if d <= R + TOL * max(d, R)]
    return covering_number(m.subspace(ball), r, mode)


def adim_estimate(
    m: FinMetricSpace,
    scale_pairs: Iterable[tuple[float, float]] | None = None,
    centers: Iterable | None = None,
    mode: str = "auto",
) -> AssouadEstimate:
    """Max over centers and ``(R, r)`` of ``log N(B(x, R), r) / log(R / r)``.

    The constant of the Assouad bound is fixed to 1, so this is a sample
    statistic, not the infimal exponent.  ``scale_pairs`` defaults to
    :func:`full_span_pairs`.
    """
    if len(m) <= 1:
        return AssouadEstimate(0.0)
    pairs = full_span_pairs(m) if scale_pairs is None else list(scale_pairs)
    if not pairs:
        raise DomainError("scale pair set is empty")
    for R, r in pairs:
        if not 0 < r < R:
            raise DomainError(f"each pair needs 0 < r < R, got {(R, r)}")
    centers = list(m.labels if centers is None else centers)
    best = AssouadEstimate(0.0)
    table = []
    for R, r in pairs:
        for x in centers:
            count = ball_covering_number(m, x, R, r, mode)
            ratio = math.log(count) / math.log(R / r)
            table.append((x, R, r, count, ratio))
            if ratio > best.value:
                best = AssouadEstimate(ratio, x, R, r, count)
    return AssouadEstimate(best.value, best.center, best.R, best.r, best.count, tuple(table))


def single_linkage_ultrametric(m: FinMetricSpace) -> FinMetricSpace:
    """Subdominant ultrametric: merge heights of the single-linkage dendrogram.

    Kruskal's algorithm on the complete graph, edges ordered by
    ``(weight, i, j)`` so ties resolve by label order.
    """
    n = len(m)
    parent = list(range(n))
    members = {i: [i] for i in range(n)}

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    iu, ju = np.triu_indices(n, 1)
    w = m.dist[iu, ju]
    order = np.lexsort((ju, iu, w))
    out = np.zeros((n, n))
    merged = 0
    for e in order:
        a, b = find(int(iu[e])), find(int(ju[e]))
        if a == b:
            continue
        h = float(w[e])
        A, B = members.pop(a), members.pop(b)
        out[np.ix_(A, B)] = h
        out[np.ix_(B, A)] = h
        parent[b] = a
        members[a] = A + B
        merged += 1
        if merged == n - 1:
            break
    return FinMetricSpace(m.labels, out)


def merge_heights(u: FinMetricSpace) -> list[float]:
    return u.spectrum()


def sparse_ultrametric(m: FinMetricSpace) -> FinMetricSpace:
    """Single-linkage tree of ``m`` with its k merge heights sent, in order,
    to ``2**-(2**k), ..., 2**-(2**1)``."""
    require_metric(m, what="sparse_ultrametric input")
    u = single_linkage_ultrametric(m)
    heights = merge_heights(u)
    k = len(heights)
    if k > MAX_SPARSE_LEVELS:
        raise CapacityError(
            f"{k} distinct merge heights; at most {MAX_SPARSE_LEVELS} fit in double precision"
        )
    targets = [2.0 ** -(2 ** (k - j)) for j in range(k)]
    out = np.zeros_like(u.dist)
    for h, t in zip(heights, targets):
        out[(u.dist > 0) & (np.abs(u.dist - h) <= TOL * np.maximum(u.dist, h))] = t
    return FinMetricSpace(m.labels, out)


@dataclass
class ProductCoveringReport:
    norm: str
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row["ok"] for row in self.rows)


def product_covering_check(
    m1: FinMetricSpace, m2: FinMetricSpace, norm: str, scales: Iterable[float]
) -> ProductCoveringReport:
    """Check ``N_prod(r) <= N1(r) N2(r)`` (linf) or ``<= N1(r/2) N2(r/2)`` (l1).

    Factors are counted exactly; the product exactly when it has at most
    ``EXACT_LIMIT`` points and greedily (an upper bound) otherwise.
    """
    for f in (m1, m2):
        if len(f) > EXACT_LIMIT:
            raise CapacityError(f"factor with {len(f)} points exceeds the exact limit {EXACT_LIMIT}")
    prod = product_metric(m1, m2, norm)
    rep = ProductCoveringReport(norm)
    for r in sorted({float(s) for s in scales}, reverse=True):
        fr = r if norm == "linf" else r / 2
        n1, n2 = covering_number(m1, fr, "exact"), covering_number(m2, fr, "exact")
        mode = "exact" if len(prod) <= EXACT_LIMIT else "greedy"
        npr = covering_number(prod, r, mode)
        rep.rows.append({"r": r, "n1": n1, "n2": n2, "product": npr, "bound": n1 * n2, "mode": mode, "ok": npr <= n1 * n2})
    return rep

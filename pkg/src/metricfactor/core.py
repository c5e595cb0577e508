"""Finite metric spaces, set distances, products and distances between metrics.

Every comparison of distances goes through :func:`le` / :func:`close`, which
apply the package-wide relative tolerance ``TOL``.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, StructuralError

TOL = 1e-9

Label = Hashable


def le(a: float, b: float, tol: float = TOL) -> bool:
    """``a <= b`` up to relative tolerance."""
    return a <= b + tol * max(abs(a), abs(b))


def close(a: float, b: float, tol: float = TOL) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b))


def _tol_matrix(a: np.ndarray, b: np.ndarray, tol: float = TOL) -> np.ndarray:
    return tol * np.maximum(np.abs(a), np.abs(b))


@dataclass(frozen=True, eq=False)
class FinMetricSpace:
    """Ordered labels plus a square distance matrix.

    Construction only checks structure (shape, distinct labels, finite
    non-negative entries); the metric axioms are checked by
    :func:`validate_metric`.
    """

    labels: tuple
    dist: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        dist = np.array(self.dist, dtype=float, copy=True)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise StructuralError(f"distance matrix must be square, got shape {dist.shape}")
        if dist.shape[0] != len(labels):
            raise StructuralError(
                f"matrix has {dist.shape[0]} rows but there are {len(labels)} labels"
            )
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise StructuralError("labels must be distinct")
        if not np.all(np.isfinite(dist)):
            raise StructuralError("distance matrix contains non-finite entries")
        if np.any(dist < 0):
            raise StructuralError("distance matrix contains negative entries")
        dist.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"FinMetricSpace(n={len(self)}, labels={list(self.labels)[:6]}{'...' if len(self) > 6 else ''})"

    def index(self, label: Label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise StructuralError(f"unknown label {label!r}") from None

    def indices(self, labels: Iterable[Label]) -> list[int]:
        return [self.index(lab) for lab in labels]

    def __contains__(self, label: Label) -> bool:
        return label in self._index

    def d(self, a: Label, b: Label) -> float:
        return float(self.dist[self.index(a), self.index(b)])

    def subspace(self, labels: Iterable[Label]) -> "FinMetricSpace":
        """Restriction to ``labels`` (kept in the order of this space)."""
        wanted = set(labels)
        idx = [i for i, lab in enumerate(self.labels) if lab in wanted]
        if len(idx) != len(wanted):
            missing = wanted - set(self.labels)
            raise StructuralError(f"unknown labels {sorted(map(str, missing))}")
        return FinMetricSpace(tuple(self.labels[i] for i in idx), self.dist[np.ix_(idx, idx)])

    def ordered_subset(self, labels: Iterable[Label]) -> tuple:
        """``labels`` as a tuple in this space's label order, checked for membership."""
        wanted = set(labels)
        for lab in wanted:
            self.index(lab)
        return tuple(lab for lab in self.labels if lab in wanted)

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if len(self) else 0.0

    def spectrum(self) -> list[float]:
        """Sorted distinct positive distances, merged within tolerance."""
        n = len(self)
        vals = np.sort(self.dist[np.triu_indices(n, 1)])
        out: list[float] = []
        for v in vals:
            v = float(v)
            if v > 0 and (not out or not close(out[-1], v)):
                out.append(v)
        return out

    def min_positive_distance(self) -> float:
        spec = self.spectrum()
        return spec[0] if spec else 0.0

    def same_as(self, other: "FinMetricSpace", tol: float = TOL) -> bool:
        """Same labels in the same order and entrywise equal distances."""
        if self.labels != other.labels:
            return False
        return bool(np.all(np.abs(self.dist - other.dist) <= _tol_matrix(self.dist, other.dist, tol)))


@dataclass(frozen=True)
class Violation:
    kind: str
    labels: tuple
    slack: float


@dataclass(frozen=True)
class ValidationReport:
    is_metric: bool
    is_ultrametric: bool
    worst_violation: Violation | None

    def as_dict(self) -> dict:
        out = {"is_metric": self.is_metric, "is_ultrametric": self.is_ultrametric, "worst_violation": None}
        if self.worst_violation is not None:
            w = self.worst_violation
            out["worst_violation"] = {"kind": w.kind, "labels": [str(x) for x in w.labels], "slack": w.slack}
        return out


def _worst_triple(d: np.ndarray, ultra: bool) -> tuple[float, float, tuple[int, int, int]]:
    """Most violated (i, j, k) for ``d[i,j] <= d[i,k] (+|max) d[k,j]``.

    Returns (normalized_slack, raw_slack, triple); normalized slack is the raw
    slack minus the tolerance allowance, so a negative value is a violation.
    """
    n = d.shape[0]
    best = (math.inf, math.inf, (0, 0, 0))
    for k in range(n):
        if ultra:
            rhs = np.maximum(d[:, k][:, None], d[k, :][None, :])
        else:
            rhs = d[:, k][:, None] + d[k, :][None, :]
        raw = rhs - d
        norm = raw + _tol_matrix(rhs, d)
        flat = int(np.argmin(norm))
        i, j = divmod(flat, n)
        if norm[i, j] < best[0]:
            best = (float(norm[i, j]), float(raw[i, j]), (i, j, k))
    return best


def validate_metric(m: FinMetricSpace) -> ValidationReport:
    """Check the metric axioms and the strong triangle inequality."""
    d = m.dist
    n = len(m)
    lab = m.labels
    if n == 0:
        return ValidationReport(True, True, None)
    diag = np.diag(d)
    if np.any(diag != 0):
        i = int(np.argmax(np.abs(diag)))
        return ValidationReport(False, False, Violation("diagonal", (lab[i],), -float(diag[i])))
    asym = np.abs(d - d.T) - _tol_matrix(d, d.T)
    if np.any(asym > 0):
        i, j = divmod(int(np.argmax(asym)), n)
        return ValidationReport(False, False, Violation("symmetry", (lab[i], lab[j]), -float(abs(d[i, j] - d[j, i]))))
    off = d + np.eye(n) * (1.0 + d.max())
    if np.any(off <= 0):
        i, j = divmod(int(np.argmin(off)), n)
        return ValidationReport(False, False, Violation("positivity", (lab[i], lab[j]), float(d[i, j])))
    norm, raw, (i, j, k) = _worst_triple(d, ultra=False)
    if norm < 0:
        return ValidationReport(False, False, Violation("triangle", (lab[i], lab[j], lab[k]), raw))
    norm, raw, (i, j, k) = _worst_triple(d, ultra=True)
    if norm < 0:
        return ValidationReport(True, False, Violation("strong_triangle", (lab[i], lab[j], lab[k]), raw))
    return ValidationReport(True, True, None)


def require_metric(m: FinMetricSpace, *, ultra: bool = False, what: str = "input") -> None:
    rep = validate_metric(m)
    if not rep.is_metric:
        raise DomainError(f"{what} is not a metric: {rep.worst_violation}")
    if ultra and not rep.is_ultrametric:
        raise DomainError(f"{what} is not an ultrametric: {rep.worst_violation}")


def _subset_indices(m: FinMetricSpace, A: Iterable[Label]) -> list[int]:
    idx = sorted(set(m.indices(A)))
    if not idx:
        raise DomainError("subset must be non-empty")
    return idx


def rho(m: FinMetricSpace, A: Iterable[Label]) -> np.ndarray:
    """Vector of distances to ``A``, one entry per label of ``m``."""
    idx = _subset_indices(m, A)
    return m.dist[:, idx].min(axis=1)


def dist_to_set(m: FinMetricSpace, A: Iterable[Label], x: Label) -> float:
    idx = _subset_indices(m, A)
    return float(m.dist[m.index(x), idx].min())


@dataclass(frozen=True)
class Neighborhoods:
    closed: tuple
    open: tuple
    exterior: tuple


def set_neighborhoods(m: FinMetricSpace, A: Iterable[Label], eps: float) -> Neighborhoods:
    """Closed/open ``eps``-neighbourhoods of ``A`` and the complement of the open one."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    r = rho(m, A)
    closed, opened, ext = [], [], []
    for lab, v in zip(m.labels, r):
        if le(v, eps):
            closed.append(lab)
        # strict side: v < eps beyond tolerance counts as inside
        if v < eps and not close(v, eps):
            opened.append(lab)
        else:
            ext.append(lab)
    return Neighborhoods(tuple(closed), tuple(opened), tuple(ext))


def product_metric(m1: FinMetricSpace, m2: FinMetricSpace, norm: str) -> FinMetricSpace:
    """l1 or linf product; labels are pairs ``(a, b)`` in row-major order."""
    if norm not in ("l1", "linf"):
        raise DomainError(f"norm must be 'l1' or 'linf', got {norm!r}")
    a = m1.dist[:, None, :, None]
    b = m2.dist[None, :, None, :]
    full = a + b if norm == "l1" else np.maximum(a, b)
    n1, n2 = len(m1), len(m2)
    labels = tuple((x, y) for x in m1.labels for y in m2.labels)
    return FinMetricSpace(labels, full.reshape(n1 * n2, n1 * n2))


def _same_labels(d: FinMetricSpace, e: FinMetricSpace) -> None:
    if d.labels != e.labels:
        raise StructuralError("metrics are defined on different label sequences")


def join_metrics(d: FinMetricSpace, e: FinMetricSpace) -> FinMetricSpace:
    _same_labels(d, e)
    return FinMetricSpace(d.labels, np.maximum(d.dist, e.dist))


def sup_distance(d: FinMetricSpace, e: FinMetricSpace) -> float:
    _same_labels(d, e)
    if len(d) == 0:
        return 0.0
    return float(np.abs(d.dist - e.dist).max())


@dataclass(frozen=True)
class ScaleSet:
    """A value set S containing 0: all reals, a finite list, or ``{q**n : n in Z}``."""

    kind: str
    values: tuple = ()
    ratio: float | None = None

    def __post_init__(self):
        if self.kind == "all":
            return
        if self.kind == "explicit":
            vals = tuple(float(v) for v in self.values)
            if not vals or any(v <= 0 for v in vals):
                raise DomainError("explicit scale values must be strictly positive")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise DomainError("explicit scale values must be strictly increasing")
            object.__setattr__(self, "values", vals)
            return
        if self.kind == "geometric":
            if self.ratio is None or not 0 < self.ratio < 1:
                raise DomainError("geometric ratio must lie strictly between 0 and 1")
            return
        raise DomainError(f"unknown scale set kind {self.kind!r}")

    @classmethod
    def all_reals(cls) -> "ScaleSet":
        return cls("all")

    @classmethod
    def explicit(cls, values: Iterable[float]) -> "ScaleSet":
        return cls("explicit", tuple(values))

    @classmethod
    def geometric(cls, ratio: float) -> "ScaleSet":
        return cls("geometric", ratio=float(ratio))

    @classmethod
    def parse(cls, text: str) -> "ScaleSet":
        """Parse ``all``, ``geometric:0.5`` or ``explicit:1,5``."""
        kind, _, rest = text.strip().partition(":")
        kind = kind.lower()
        if kind in ("all", "allreals"):
            return cls.all_reals()
        if kind == "geometric":
            return cls.geometric(float(rest))
        if kind == "explicit":
            return cls.explicit(float(v) for v in rest.split(",") if v.strip())
        raise DomainError(f"cannot parse scale set {text!r}")

    @property
    def characteristic(self) -> bool:
        return self.kind in ("all", "geometric")

    def as_dict(self) -> dict:
        if self.kind == "all":
            return {"kind": "all"}
        if self.kind == "explicit":
            return {"kind": "explicit", "values": list(self.values)}
        return {"kind": "geometric", "ratio": self.ratio}

    @classmethod
    def from_dict(cls, obj: Mapping) -> "ScaleSet":
        kind = obj.get("kind")
        if kind == "explicit":
            return cls.explicit(obj.get("values", ()))
        if kind == "geometric":
            return cls.geometric(obj["ratio"])
        return cls(kind)

    def contains(self, t: float) -> bool:
        return t == 0 or close(scale_ceiling(self, t), t)


def _geometric_exponent(q: float, t: float) -> int:
    """Largest integer n with ``q**n >= t`` (so ``q**n`` is the least power >= t)."""
    n = math.floor(math.log(t) / math.log(q))
    # the log estimate may be off by one near exact powers; settle with exact powers
    while q**n < t:
        n -= 1
    while q ** (n + 1) >= t:
        n += 1
    return n


def scale_ceiling(S: ScaleSet, t: float) -> float:
    """Least element of S that is >= t, or ``math.inf``."""
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        return 0.0
    if S.kind == "all":
        return float(t)
    if S.kind == "explicit":
        i = bisect.bisect_left(S.values, t)
        # accept a value just below t when it matches within tolerance
        if i > 0 and close(S.values[i - 1], t):
            return S.values[i - 1]
        return S.values[i] if i < len(S.values) else math.inf
    q = S.ratio
    n = _geometric_exponent(q, t)
    below = q ** (n + 1)
    if close(below, t):
        return below
    return q**n


def ultra_distance(d: FinMetricSpace, e: FinMetricSpace, S: ScaleSet) -> float:
    """Least eps in S with ``d <= e v eps`` and ``e <= d v eps``; may be ``math.inf``."""
    _same_labels(d, e)
    if not S.characteristic:
        raise DomainError("ultrametric distance needs a characteristic scale set (all or geometric)")
    require_metric(d, ultra=True, what="d")
    require_metric(e, ultra=True, what="e")
    differ = np.abs(d.dist - e.dist) > _tol_matrix(d.dist, e.dist)
    if not np.any(differ):
        return 0.0
    raw = float(np.maximum(d.dist, e.dist)[differ].max())
    return scale_ceiling(S, raw)


@dataclass(frozen=True)
class SeparationReport:
    is_h_separated: bool
    is_eta_dense: bool


def separated_and_dense(m: FinMetricSpace, A: Iterable[Label], h: float, eta: float) -> SeparationReport:
    idx = _subset_indices(m, A)
    sub = m.dist[np.ix_(idx, idx)]
    off = sub[~np.eye(len(idx), dtype=bool)]
    separated = bool(np.all(off + TOL * np.maximum(off, h) >= h)) if off.size else True
    r = m.dist[:, idx].min(axis=1)
    dense = bool(np.all(r <= eta + TOL * np.maximum(r, eta)))
    return SeparationReport(separated, dense)


def is_separated(m: FinMetricSpace, A: Sequence[Label], h: float) -> bool:
    idx = m.indices(A)
    for a_pos, i in enumerate(idx):
        for j in idx[a_pos + 1:]:
            if not le(h, float(m.dist[i, j])):
                return False
    return True


@dataclass
class MetricFamily:
    """Named metrics sharing one label sequence."""

    labels: tuple
    members: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = tuple(self.labels)

    def add(self, name: str, metric: FinMetricSpace | np.ndarray) -> None:
        if isinstance(metric, FinMetricSpace):
            if metric.labels != self.labels:
                raise StructuralError(f"member {name!r} is on a different label sequence")
        else:
            metric = FinMetricSpace(self.labels, metric)
        require_metric(metric, what=f"member {name!r}")
        self.members[name] = metric

    def __getitem__(self, name: str) -> FinMetricSpace:
        return self.members[name]

    def names(self) -> list[str]:
        return list(self.members)

    def sup_distances(self) -> np.ndarray:
        names = self.names()
        out = np.zeros((len(names), len(names)))
        for i, a in enumerate(names):
            for j, b in enumerate(names):
                out[i, j] = sup_distance(self.members[a], self.members[b])
        return out

    def ultra_distances(self, S: ScaleSet) -> np.ndarray:
        names = self.names()
        out = np.zeros((len(names), len(names)))
        for i, a in enumerate(names):
            for j, b in enumerate(names):
                out[i, j] = ultra_distance(self.members[a], self.members[b], S)
        return out

"""Retractions of a finite metric space onto a subset F.

Two constructions are provided:

* :func:`retract_engelking` -- scale decomposition into annuli around F,
  diameter-bounded pieces per annulus and nested maximal separated nets in F.
  Every point of a piece is sent to one net point chosen for that piece.
* :func:`retract_bdhm` -- for ultrametrics: ``r(x)`` is the first label (in
  label order) among the points of F within ``tau * rho_F(x)`` of ``x``.

Both record enough data for :func:`verify_retraction` to re-check the
quantitative certificates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import TOL, FinMetricSpace, Label, close, le, require_metric, rho
from .errors import DomainError, StructuralError

# Quantitative self-reference constant for the Engelking construction.
SR_FACTOR = 17.0


def annulus_index(rho_x: float) -> int:
    """Annulus of a point at distance ``rho_x > 0`` from F.

    Annulus 0 holds ``rho > 1/2``; annulus ``i >= 1`` holds
    ``2**-(i+1) < rho <= 2**-i``.
    """
    if rho_x <= 0:
        raise DomainError("points of F have no annulus")
    if rho_x > 0.5:
        return 0
    i = max(1, math.floor(-math.log2(rho_x)))
    # exact powers of two settle the boundary cases
    while rho_x > 2.0**-i:
        i -= 1
    while rho_x <= 2.0 ** -(i + 1):
        i += 1
    return i


@dataclass(frozen=True)
class Piece:
    annulus: int
    members: tuple
    o: Label
    a: Label
    p: Label
    R: float


@dataclass(frozen=True)
class EngelkingTrace:
    i_range: tuple
    V: tuple
    U: tuple
    nets: tuple
    pieces: tuple

    def as_dict(self) -> dict:
        s = lambda seq: [str(x) for x in seq]  # noqa: E731
        return {
            "i_range": list(self.i_range),
            "V": [s(v) for v in self.V],
            "U": [s(u) for u in self.U],
            "nets": [s(p) for p in self.nets],
            "pieces": [
                {
                    "annulus": pc.annulus,
                    "members": s(pc.members),
                    "o": str(pc.o),
                    "a": str(pc.a),
                    "p": str(pc.p),
                    "R": pc.R,
                }
                for pc in self.pieces
            ],
        }


@dataclass(frozen=True)
class Retraction:
    subset: tuple
    mapping: dict
    method: str
    tau: float | None = None
    trace: EngelkingTrace | None = None

    def __call__(self, x: Label) -> Label:
        return self.mapping[x]

    def table(self) -> list[tuple]:
        return list(self.mapping.items())


def _greedy_nets(m: FinMetricSpace, F_idx: list[int], top: int) -> list[list[int]]:
    """Nested maximal ``2**-i``-separated subsets of F for ``i = 0..top``."""
    nets: list[list[int]] = []
    current: list[int] = []
    for i in range(top + 1):
        h = 2.0**-i
        current = list(current)
        for j in F_idx:
            if j in current:
                continue
            if all(le(h, float(m.dist[j, p])) for p in current):
                current.append(j)
        current.sort()
        nets.append(current)
    return nets


def retract_engelking(m: FinMetricSpace, F: Iterable[Label]) -> Retraction:
    """Scale-decomposition retraction onto ``F`` with a full audit trace.

    ``V_i`` is exactly the closed ``2**-(i+1)``-neighbourhood of F.  Annulus 0
    is ``X \\ V_0`` and annulus ``i >= 1`` is ``V_{i-1} \\ V_i``.  Pieces are
    greedy balls of radius ``2**-(i+1)`` in label order, so their diameter is
    at most ``2**-i``.  A piece is sent to the least-label point of the net
    ``P_i`` lying within ``2**-i`` of the nearest point of F to the piece.
    """
    F = m.ordered_subset(F)
    if not F:
        raise DomainError("F must be non-empty")
    n = len(m)
    F_idx = m.indices(F)
    in_f = set(F_idx)
    r = rho(m, F)
    outside = [i for i in range(n) if i not in in_f]
    ann = {i: annulus_index(float(r[i])) for i in outside}
    top = max(ann.values()) if ann else 0

    V = []
    for i in range(top + 1):
        V.append(tuple(m.labels[j] for j in range(n) if float(r[j]) <= 2.0 ** -(i + 1)))
    U = [tuple(m.labels[j] for j in outside if ann[j] == i) for i in range(top + 1)]
    nets = _greedy_nets(m, F_idx, top)

    mapping = {lab: lab for lab in F}
    pieces = []
    for i in range(top + 1):
        radius = 2.0 ** -(i + 1)
        pending = [j for j in outside if ann[j] == i]
        while pending:
            o0 = pending[0]
            members = [j for j in pending if le(float(m.dist[o0, j]), radius)]
            taken = set(members)
            pending = [j for j in pending if j not in taken]
            block = m.dist[np.ix_(members, F_idx)]
            R = float(block.min())
            # first (piece member, F point) pair in label order attaining R
            oi, ai = np.argwhere(block == block.min())[0]
            o, a = members[int(oi)], F_idx[int(ai)]
            h = 2.0**-i
            cands = [p for p in nets[i] if p == a or float(m.dist[a, p]) < h]
            if not cands:
                raise RuntimeError("net is not maximal; this is a bug")
            p = a if a in cands else min(cands)
            for j in members:
                mapping[m.labels[j]] = m.labels[p]
            pieces.append(
                Piece(i, tuple(m.labels[j] for j in members), m.labels[o], m.labels[a], m.labels[p], R)
            )
    ordered = {lab: mapping[lab] for lab in m.labels}
    trace = EngelkingTrace(
        (0, top),
        tuple(V),
        tuple(U),
        tuple(tuple(m.labels[j] for j in net) for net in nets),
        tuple(pieces),
    )
    return Retraction(F, ordered, "engelking", None, trace)


def retract_bdhm(m: FinMetricSpace, F: Iterable[Label], tau: float) -> Retraction:
    """Order-based Lipschitz retraction of an ultrametric space onto ``F``."""
    if not tau > 1:
        raise DomainError("tau must be greater than 1")
    require_metric(m, ultra=True, what="retraction input")
    F = m.ordered_subset(F)
    if not F:
        raise DomainError("F must be non-empty")
    F_idx = m.indices(F)
    r = rho(m, F)
    mapping = {}
    for x in range(len(m)):
        bound = tau * float(r[x])
        # F_idx is in label order, so the first hit is the least element of the star set
        star = next(a for a in F_idx if float(m.dist[x, a]) <= bound)
        mapping[m.labels[x]] = m.labels[star]
    return Retraction(F, mapping, "bdhm", float(tau), None)


def star_set(m: FinMetricSpace, F: Iterable[Label], x: Label, tau: float) -> tuple:
    F = m.ordered_subset(F)
    bound = tau * float(rho(m, F)[m.index(x)])
    return tuple(a for a in F if m.d(x, a) <= bound)


@dataclass
class Certificate:
    name: str
    passed: bool = True
    worst_slack: float = math.inf
    counterexample: tuple | None = None

    def record(self, slack: float, witness: tuple, ok: bool | None = None) -> None:
        if slack < self.worst_slack:
            self.worst_slack = slack
        failed = (slack < 0) if ok is None else not ok
        if failed and self.passed:
            self.passed = False
            self.counterexample = tuple(str(w) for w in witness)


@dataclass
class CertificateReport:
    method: str
    certificates: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.certificates)

    def get(self, name: str) -> Certificate:
        for c in self.certificates:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "passed": self.passed,
            "certificates": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "worst_slack": None if math.isinf(c.worst_slack) else c.worst_slack,
                    "counterexample": list(c.counterexample) if c.counterexample else None,
                }
                for c in self.certificates
            ],
        }


def _rel_slack(rhs: float, lhs: float) -> float:
    """``rhs - lhs`` with the tolerance allowance added (negative means violated)."""
    return rhs - lhs + TOL * max(abs(rhs), abs(lhs))


def _check_trace(m: FinMetricSpace, F: tuple, trace: EngelkingTrace, rep: CertificateReport) -> None:
    r = rho(m, F)
    rv = {lab: float(r[i]) for i, lab in enumerate(m.labels)}
    F_set = set(F)

    sandwich = Certificate("trace_sandwich")
    prev = set(m.labels)
    for i, Vi in enumerate(trace.V):
        Vi = set(Vi)
        for x in m.labels:
            if rv[x] <= 2.0 ** -(i + 1) and x not in Vi:
                sandwich.record(-1.0, (i, x))
            if x in Vi and not (rv[x] < 2.0**-i and x in prev):
                sandwich.record(-1.0, (i, x))
        prev = Vi
    rep.certificates.append(sandwich)

    annuli = Certificate("trace_annuli")
    V = [set(v) for v in trace.V]
    for i, Ui in enumerate(trace.U):
        want = (set(m.labels) - V[0]) if i == 0 else (V[i - 1] - V[i])
        if set(Ui) != want:
            annuli.record(-1.0, (i,))
    if V and V[-1] != F_set:
        annuli.record(-1.0, ("last V is not F",))
    rep.certificates.append(annuli)

    part = Certificate("trace_partition")
    diam = Certificate("trace_piece_diameter")
    anchors = Certificate("trace_anchors")
    for i, Ui in enumerate(trace.U):
        covered: list = []
        for pc in trace.pieces:
            if pc.annulus != i:
                continue
            covered.extend(pc.members)
            idx = m.indices(pc.members)
            dmax = float(m.dist[np.ix_(idx, idx)].max())
            diam.record(_rel_slack(2.0**-i, dmax), (i, *pc.members))
            F_idx = m.indices(F)
            R = float(m.dist[np.ix_(idx, F_idx)].min())
            if not (close(R, pc.R) and close(m.d(pc.o, pc.a), R)):
                anchors.record(-1.0, (pc.o, pc.a))
            if pc.o not in pc.members or pc.a not in F_set:
                anchors.record(-1.0, (pc.o, pc.a))
            if pc.p not in trace.nets[i]:
                anchors.record(-1.0, (pc.p,))
            h = 2.0**-i
            anchors.record(h - m.d(pc.a, pc.p) if pc.a != pc.p else h, (pc.a, pc.p))
        if sorted(map(str, covered)) != sorted(map(str, Ui)) or len(covered) != len(set(covered)):
            part.record(-1.0, (i,))
    rep.certificates += [part, diam, anchors]

    nets = Certificate("trace_nets")
    prev_net: set = set()
    for i, P in enumerate(trace.nets):
        h = 2.0**-i
        if not set(P) <= F_set or not prev_net <= set(P):
            nets.record(-1.0, (i,))
        for a_pos, a in enumerate(P):
            for b in P[a_pos + 1:]:
                nets.record(_rel_slack(m.d(a, b), h), (i, a, b))
        for y in F:
            if y not in P and all(le(h, m.d(y, p)) for p in P):
                nets.record(-1.0, (i, y, "not maximal"))
        prev_net = set(P)
    rep.certificates.append(nets)


def verify_retraction(
    m: FinMetricSpace,
    F: Iterable[Label],
    r: Retraction,
    eps_grid: Iterable[float] | None = None,
) -> CertificateReport:
    """Re-check every certificate that applies to ``r.method``.

    ``eps_grid`` defaults to the distance spectrum of ``m``.
    """
    F = m.ordered_subset(F)
    F_set = set(F)
    if set(r.mapping) != set(m.labels):
        raise StructuralError("retraction is not total on X")
    eps_grid = list(m.spectrum() if eps_grid is None else eps_grid)
    rv = rho(m, F)
    rep = CertificateReport(r.method)

    fixes = Certificate("fixes_F")
    rng = Certificate("range_in_F")
    idem = Certificate("idempotent")
    for x in m.labels:
        y = r.mapping[x]
        if x in F_set and y != x:
            fixes.record(-1.0, (x, y))
        if y not in F_set:
            rng.record(-1.0, (x, y))
        elif r.mapping.get(y) != y:
            idem.record(-1.0, (x, y))
    rep.certificates += [fixes, rng, idem]

    if r.method == "engelking":
        sr = Certificate("sr_bound")
        sr17 = Certificate("sr_17_rho")
        for i, x in enumerate(m.labels):
            if x in F_set:
                continue
            p = float(rv[i])
            moved = m.d(x, r.mapping[x])
            M = annulus_index(p)
            sr.record(_rel_slack(p + 2.0 ** (-M + 2), moved), (x, r.mapping[x]))
            sr17.record(_rel_slack(SR_FACTOR * p, moved), (x, r.mapping[x]))
        rep.certificates += [sr, sr17]
        if r.trace is not None:
            d_cert = Certificate("d_net_containment")
            for i, P in enumerate(r.trace.nets):
                P = set(P)
                for j, x in enumerate(m.labels):
                    # exact threshold: the annuli are cut at exact powers of two
                    if float(rv[j]) >= 2.0**-i and r.mapping[x] not in P:
                        d_cert.record(-1.0, (i, x, r.mapping[x]))
            rep.certificates.append(d_cert)
            _check_trace(m, F, r.trace, rep)
    elif r.method == "bdhm":
        tau = r.tau
        lip = Certificate("tau2_lipschitz")
        n = len(m)
        for i in range(n):
            for j in range(i + 1, n):
                x, y = m.labels[i], m.labels[j]
                lip.record(_rel_slack(tau * tau * float(m.dist[i, j]), m.d(r.mapping[x], r.mapping[y])), (x, y))
        sr = Certificate("sr_tau_rho")
        for i, x in enumerate(m.labels):
            sr.record(_rel_slack(tau * float(rv[i]), m.d(x, r.mapping[x])), (x, r.mapping[x]))
        sep = Certificate("image_separation")
        for eps in eps_grid:
            far = [x for j, x in enumerate(m.labels) if le(eps, float(rv[j]))]
            images = sorted({r.mapping[x] for x in far}, key=m.index)
            for a_pos, a in enumerate(images):
                for b in images[a_pos + 1:]:
                    sep.record(_rel_slack(m.d(a, b), eps), (eps, a, b))
        rep.certificates += [lip, sr, sep]
    return rep

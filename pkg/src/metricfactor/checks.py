"""Named invariant suites run over seeded random instances.

Each suite maps an :class:`Instance` to a list of failure records.  Reports
contain no timings or other run-dependent data, so a fixed seed always yields
the same report bytes.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    FinMetricSpace,
    ScaleSet,
    close,
    join_metrics,
    product_metric,
    rho,
    separated_and_dense,
    sup_distance,
    ultra_distance,
    validate_metric,
)
from .dimension import (
    EXACT_LIMIT,
    covering_number,
    packing_number,
    profile_violations,
    scale_profile,
)
from .factorize import (
    build_context,
    embed_phi,
    extend_l1,
    extend_linf,
    pullback,
    restriction_matches,
    truncate_factor,
)
from .gen import XorShift64Star, random_metric, random_ultra
from .quotient import check_quotient_laws, quotient
from .retraction import retract_bdhm, retract_engelking, verify_retraction
from .spacefile import SpaceDoc

SEED_ENV = "METRICFACTOR_SEED"
DEFAULT_SEED = 20240601
BDHM_TAUS = (1.5, 2.0, 4.0)
ETAS = (0.1, 1.0)
DIMENSION_SIZE_CAP = 12


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw else DEFAULT_SEED


@dataclass(frozen=True, eq=False)
class Instance:
    space: FinMetricSpace
    subset: tuple
    seed: int
    ultra: bool

    def to_doc(self, suite: str, failures: list) -> SpaceDoc:
        return SpaceDoc(
            self.space,
            {"F": self.subset},
            None,
            {"suite": suite, "instance_seed": self.seed, "failures": failures},
        )

    @classmethod
    def from_doc(cls, doc: SpaceDoc) -> "Instance":
        rep = validate_metric(doc.space)
        F = doc.subsets.get("F") or doc.space.labels[:1]
        return cls(doc.space, tuple(F), int(doc.extra.get("instance_seed", 0)), rep.is_ultrametric)

    def restrict(self, labels) -> "Instance":
        sub = self.space.subspace(labels)
        return Instance(sub, tuple(x for x in self.subset if x in sub), self.seed, self.ultra)


def make_instance(seed: int, max_size: int) -> Instance:
    rng = XorShift64Star(seed)
    n = 1 + rng.below(max_size)
    ultra = rng.below(2) == 1
    space = random_ultra(n, rng.next_u64(), 2.0) if ultra else random_metric(n, rng.next_u64(), 1 + rng.below(3))
    k = 1 + rng.below(n)
    F = rng.sample(space.labels, k)
    # classify by validation, not by generator, so replays from file agree
    return Instance(space, space.ordered_subset(F), seed, validate_metric(space).is_ultrametric)


def _fail(name: str, detail) -> dict:
    return {"check": name, "detail": str(detail)}


def suite_quotient(inst: Instance) -> list:
    m, F = inst.space, inst.subset
    q = quotient(m, F)
    rep = check_quotient_laws(q, m, F)
    out = [_fail(f["law"], f"{f['labels']}: {f['detail']}") for f in rep.failures]
    r = rho(m, F)
    in_f = set(F)
    outside = [i for i, x in enumerate(m.labels) if x not in in_f]
    for a, i in enumerate(outside):
        for j in outside[a + 1:]:
            got = q.space.d(m.labels[i], m.labels[j])
            threshold = float(max(r[i], r[j]))
            below = got < threshold and not close(got, threshold)
            if below and not close(got, float(m.dist[i, j])):
                out.append(_fail("local_isometry", (m.labels[i], m.labels[j])))
    return out


def suite_retraction(inst: Instance) -> list:
    m, F = inst.space, inst.subset
    out = []
    r = retract_engelking(m, F)
    rep = verify_retraction(m, F, r)
    out += [_fail(f"engelking:{c.name}", c.counterexample) for c in rep.certificates if not c.passed]
    if inst.ultra:
        for tau in BDHM_TAUS:
            rb = retract_bdhm(m, F, tau)
            rep = verify_retraction(m, F, rb)
            out += [_fail(f"bdhm[{tau}]:{c.name}", c.counterexample) for c in rep.certificates if not c.passed]
    return out


def _metrics_equal(a: FinMetricSpace, b: FinMetricSpace) -> bool:
    return a.same_as(b)


def _pointwise_le(a: FinMetricSpace, b: FinMetricSpace) -> bool:
    return bool(np.all(a.dist <= b.dist + 1e-9 * np.maximum(a.dist, b.dist)))


def _check_extensor(ext: Callable, ctx, d, e, label: str, dist_fn, out: list) -> None:
    ed, ee = ext(ctx, d), ext(ctx, e)
    if not restriction_matches(ed, d):
        out.append(_fail(f"{label}:restriction", "extension does not restrict to d on F"))
    rep = validate_metric(ed)
    if not rep.is_metric:
        out.append(_fail(f"{label}:metric", rep.worst_violation))
    lhs, rhs = dist_fn(ed, ee), dist_fn(d, e)
    if not (lhs == rhs or close(lhs, rhs)):
        out.append(_fail(f"{label}:isometry", f"{lhs!r} != {rhs!r}"))
    big = join_metrics(d, e)
    eb = ext(ctx, big)
    if not _pointwise_le(ed, eb):
        out.append(_fail(f"{label}:monotone", "d <= d v e but extensions disagree"))
    if not _metrics_equal(eb, join_metrics(ed, ee)):
        out.append(_fail(f"{label}:join", "extension of the join is not the join of extensions"))


def suite_extensor(inst: Instance) -> list:
    m, F = inst.space, inst.subset
    out: list = []
    ctx = build_context(m, F)
    phi = embed_phi(ctx)
    if len(set(phi.values())) != len(phi):
        out.append(_fail("embedding:injective", "two points share an image"))
    theta = ctx.quotient.theta
    for a in F:
        if phi[a] != (a, theta):
            out.append(_fail("embedding:fixes_F", (a, phi[a])))

    rng = XorShift64Star(inst.seed ^ 0x5DEECE66D)
    dim = 1 + rng.below(3)
    d = random_metric(len(F), rng.next_u64(), dim, labels=F)
    e = random_metric(len(F), rng.next_u64(), dim, labels=F)
    _check_extensor(extend_l1, ctx, d, e, "xi", sup_distance, out)
    pb = pullback(phi, product_metric(d, ctx.factor, "l1"))
    if not np.allclose(pb.matrix, extend_l1(ctx, d).dist, rtol=1e-9, atol=0):
        out.append(_fail("xi:pullback", "formula disagrees with the pulled-back product"))
    if not pb.is_metric:
        out.append(_fail("xi:pullback_injective", "pullback along the embedding is degenerate"))
    # linf extension of plain metrics: restriction and metric axioms
    sd = extend_linf(ctx, d)
    if not restriction_matches(sd, d) or not validate_metric(sd).is_metric:
        out.append(_fail("sigma:plain_metric", "linf extension of a metric failed"))

    qlabels = ctx.quotient.space.labels
    for S, base in ((ScaleSet.geometric(0.5), 2.0), (ScaleSet.all_reals(), 3.0)):
        tag = f"sigma[{S.kind}]"
        v = random_ultra(len(qlabels), rng.next_u64(), base, labels=qlabels)
        cu = ctx.with_factor(v)
        du = random_ultra(len(F), rng.next_u64(), base, labels=F)
        eu = random_ultra(len(F), rng.next_u64(), base, labels=F)
        _check_extensor(lambda c, x: extend_linf(c, x, S), cu, du, eu, tag, lambda a, b: ultra_distance(a, b, S), out)
        sdu = extend_linf(cu, du, S)
        if not validate_metric(sdu).is_ultrametric:
            out.append(_fail(f"{tag}:ultrametric", validate_metric(sdu).worst_violation))
        bad = [float(t) for t in np.unique(sdu.dist) if not S.contains(float(t))]
        if bad:
            out.append(_fail(f"{tag}:value_set", bad[:3]))

    for eta in ETAS:
        ce = ctx.with_factor(truncate_factor(ctx.factor, eta))
        for name, ext in (("xi", extend_l1), ("sigma", extend_linf)):
            rep = separated_and_dense(ext(ce, d), F, 0.0, eta)
            if not rep.is_eta_dense:
                out.append(_fail(f"{name}:eta_dense[{eta}]", "F is not eta-dense"))
    return out


def suite_dimension(inst: Instance) -> list:
    m = inst.space
    if len(m) > DIMENSION_SIZE_CAP:
        m = m.subspace(m.labels[:DIMENSION_SIZE_CAP])
    out = []
    spectrum = m.spectrum()
    if not spectrum:
        return out
    # one scale below every distance so the all-singletons regime is covered too
    scales = spectrum + [spectrum[0] / 2]
    for r in scales:
        ne, ng = covering_number(m, r, "exact"), covering_number(m, r, "greedy")
        pe, pg = packing_number(m, r, "exact"), packing_number(m, r, "greedy")
        if not ne <= ng:
            out.append(_fail("greedy_cover_upper", (r, ne, ng)))
        if not pg <= pe:
            out.append(_fail("greedy_pack_lower", (r, pe, pg)))
        if ng > (1 + math.log(len(m))) * ne + 1e-12:
            out.append(_fail("greedy_cover_ratio", (r, ne, ng)))
    prof = scale_profile(m, scales, "exact")
    out += [_fail("profile", v) for v in profile_violations(prof)]
    assert len(m) <= EXACT_LIMIT
    return out


SUITES: dict[str, Callable[[Instance], list]] = {
    "quotient-laws": suite_quotient,
    "retraction-certificates": suite_retraction,
    "extensor-contracts": suite_extensor,
    "dimension-profile": suite_dimension,
}


def _instance_seeds(seed: int, count: int) -> list[int]:
    rng = XorShift64Star(seed)
    return [rng.next_u64() for _ in range(count)]


def _run_one(args) -> tuple:
    suite, inst_seed, size = args
    inst = make_instance(inst_seed, size)
    return inst_seed, SUITES[suite](inst)


def shrink(suite: str, inst: Instance) -> Instance:
    """Drop points one at a time while the suite keeps failing."""
    fn = SUITES[suite]
    changed = True
    while changed and len(inst.space) > 1:
        changed = False
        for x in inst.space.labels:
            rest = [y for y in inst.space.labels if y != x]
            if not any(y in inst.subset for y in rest):
                continue
            cand = inst.restrict(rest)
            try:
                failing = bool(fn(cand))
            except Exception:
                failing = False
            if failing:
                inst, changed = cand, True
                break
    return inst


@dataclass
class SuiteResult:
    report: dict
    counterexample: SpaceDoc | None

    @property
    def passed(self) -> bool:
        return self.report["passed"]

    def dumps(self) -> str:
        return json.dumps(self.report, indent=1, sort_keys=True) + "\n"


def run_suite(suite: str, instances: int = 200, seed: int | None = None, size: int = 40, jobs: int = 1) -> SuiteResult:
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    seed = default_seed() if seed is None else seed
    if suite == "dimension-profile":
        size = min(size, DIMENSION_SIZE_CAP)
    tasks = [(suite, s, size) for s in _instance_seeds(seed, instances)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=8))
    else:
        results = [_run_one(t) for t in tasks]
    failing = [(s, f) for s, f in results if f]
    counts: dict = {}
    for _, fails in failing:
        for f in fails:
            counts[f["check"]] = counts.get(f["check"], 0) + 1
    report = {
        "suite": suite,
        "seed": seed,
        "instances": instances,
        "size": size,
        "passed": not failing,
        "failing_instances": len(failing),
        "failures_by_check": counts,
    }
    cex = None
    if failing:
        s0, fails0 = failing[0]
        small = shrink(suite, make_instance(s0, size))
        fails = SUITES[suite](small)
        report["first_counterexample"] = {"instance_seed": s0, "points": len(small.space), "failures": fails or fails0}
        cex = small.to_doc(suite, fails or fails0)
    return SuiteResult(report, cex)


def replay(suite: str, doc: SpaceDoc) -> list:
    return SUITES[suite](Instance.from_doc(doc))

"""Acceptance battery: one test and one PASS/FAIL line per criterion.

Runs every check suite over 200 seeded instances (|X| <= 40, dimension
suite capped at 12 points) plus the named fixtures cantor(8), line(16) and
random_ultra(32).  Run directly with ``python tests/test_acceptance.py`` or
through pytest, which repeats the lines in its terminal summary.
"""
import math
import sys
import time

import pytest

from metricfactor import cantor, checks, line, random_ultra, sparse_ultrametric, ubdim_estimate, validate_metric
from metricfactor.dimension import adim_estimate, product_covering_check

SEED = 20240601
INSTANCES = 200
SIZE = 40

LINES: list[str] = []
_cache: dict = {}


def record(name: str, ok: bool, detail: str) -> None:
    line_ = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    LINES.append(line_)
    print(line_)


def battery(suite: str):
    if suite not in _cache:
        _cache[suite] = checks.run_suite(suite, INSTANCES, SEED, SIZE)
    return _cache[suite]


def named_fixtures():
    out = []
    for m in (cantor(8), line(16), random_ultra(32, SEED)):
        ultra = validate_metric(m).is_ultrametric
        for F in (m.labels[:1], m.labels[::5]):
            out.append(checks.Instance(m, tuple(F), SEED, ultra))
    return out


def fixture_failures(suite: str) -> list:
    key = ("named", suite)
    if key not in _cache:
        _cache[key] = [f for inst in named_fixtures() for f in checks.SUITES[suite](inst)]
    return _cache[key]


def failures(suite: str, keep) -> dict:
    """Failure counts whose check name satisfies ``keep``, battery and named fixtures together."""
    counts = {k: v for k, v in battery(suite).report["failures_by_check"].items() if keep(k)}
    for f in fixture_failures(suite):
        if keep(f["check"]):
            counts[f["check"]] = counts.get(f["check"], 0) + 1
    return counts


def verdict(name: str, counts: dict, what: str) -> None:
    ok = not counts
    record(name, ok, f"{what}; failing checks {counts}" if counts else what)
    assert ok, counts


def test_quotient_laws():
    verdict("quotient laws", failures("quotient-laws", lambda k: True), f"{INSTANCES} instances + 6 named fixtures")


def test_engelking_certificates():
    verdict(
        "engelking certificates",
        failures("retraction-certificates", lambda k: k.startswith("engelking:")),
        "fixes F, D containment, SR and 17*rho bounds, trace invariants",
    )


def test_bdhm_certificates():
    n_ultra = sum(checks.make_instance(s, SIZE).ultra for s in checks._instance_seeds(SEED, INSTANCES))
    verdict(
        "bdhm certificates",
        failures("retraction-certificates", lambda k: k.startswith("bdhm[")),
        f"tau in {checks.BDHM_TAUS} on {n_ultra} ultrametric instances",
    )


def test_embedding():
    verdict("embedding", failures("extensor-contracts", lambda k: k.startswith("embedding:")), "injective, a -> (a, theta)")


def test_extensor_contracts():
    keep = lambda k: (k.startswith("xi") or k.startswith("sigma")) and "eta_dense" not in k  # noqa: E731
    verdict("extensor contracts", failures("extensor-contracts", keep), "l1 and linf over geometric(1/2) and all reals")


def test_eta_density():
    verdict("eta density", failures("extensor-contracts", lambda k: "eta_dense" in k), f"eta in {checks.ETAS}")


def test_covering_packing_oracle():
    res = battery("dimension-profile")
    verdict(
        "covering/packing oracle",
        dict(res.report["failures_by_check"]),
        f"{INSTANCES} instances with |X| <= {checks.DIMENSION_SIZE_CAP}",
    )


def test_dimension_fixtures():
    target = math.log(2) / math.log(3)
    cantor_slope = ubdim_estimate(cantor(8), [3.0**-j for j in range(1, 9)]).value
    line_slope = ubdim_estimate(line(16)).value
    sparse_adim = adim_estimate(sparse_ultrametric(cantor(6))).value
    four = line(4)
    prod = product_covering_check(four, four, "linf", [0.5, 1, 1.5, 2, 3])
    prod_u = product_covering_check(four, random_ultra(4, SEED), "linf", [0.25, 0.5, 1])
    results = {
        f"cantor(8) slope {cantor_slope:.4f}": abs(cantor_slope - target) <= 0.02,
        f"line(16) slope {line_slope:.4f}": abs(line_slope - 1) <= 0.05,
        f"sparse cantor(6) assouad {sparse_adim:.4f}": sparse_adim <= 0.1,
        "linf products of 4-point factors": prod.passed and prod_u.passed and all(r["mode"] == "exact" for r in prod.rows),
    }
    bad = {k: v for k, v in results.items() if not v}
    record("dimension fixtures", not bad, "; ".join(results))
    assert not bad, bad


def test_determinism():
    mismatched = []
    for suite in checks.SUITES:
        again = checks.run_suite(suite, INSTANCES, SEED, SIZE)
        if again.dumps() != battery(suite).dumps():
            mismatched.append(suite)
    record("determinism", not mismatched, f"second run of {len(checks.SUITES)} suites, seed {SEED}, byte-identical reports")
    assert not mismatched


if __name__ == "__main__":
    start = time.time()
    code = pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"])
    print(f"{time.time() - start:.1f}s")
    sys.exit(code)

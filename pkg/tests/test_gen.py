import numpy as np
import pytest
from hypothesis import given, strategies as st

from metricfactor import CapacityError, DomainError, GenSpec, cantor, cantor_code, generate, grid, line, random_ultra, validate_metric
from metricfactor.gen import MAX_CANTOR_DEPTH, XorShift64Star, code_hamming, splitmix64


def test_splitmix_reference_value():
    # first output of the reference splitmix64 generator started from state 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_xorshift_is_reproducible_and_in_range():
    a, b = XorShift64Star(7), XorShift64Star(7)
    xs = [a.next_u64() for _ in range(100)]
    assert xs == [b.next_u64() for _ in range(100)]
    assert all(0 <= x < 2**64 for x in xs)
    assert len(set(xs)) == 100
    f = XorShift64Star(1)
    assert all(0 <= f.random() < 1 for _ in range(1000))


def test_cantor_depth_one():
    c = cantor(1)
    assert c.labels == ("c0", "c1")
    assert c.d("c0", "c1") == 2 / 3


def test_cantor_points_are_left_endpoints():
    c = cantor(3)
    # positions measured from c000, in units of 1/27
    pos = sorted(round(c.d("c000", x) * 27) for x in c.labels)
    assert pos == [0, 2, 6, 8, 18, 20, 24, 26]


def test_cantor_capacity():
    with pytest.raises(CapacityError):
        cantor(MAX_CANTOR_DEPTH + 1)
    with pytest.raises(CapacityError):
        GenSpec("cantor", depth=13)


def test_line_and_grid():
    assert line(4, 0.5).d("x0", "x3") == 1.5
    g = grid(2, 3)
    assert len(g) == 6
    assert g.d("g0_0", "g1_2") == pytest.approx(np.sqrt(5))


@pytest.mark.parametrize(
    "kw",
    [
        dict(kind="line", n=0),
        dict(kind="grid", n=2, m=0),
        dict(kind="line", n=3, step=0),
        dict(kind="random_ultra", n=3, height_base=1),
        dict(kind="random_metric", n=3, ambient_dim=0),
        dict(kind="torus", n=3),
    ],
)
def test_invalid_specs(kw):
    with pytest.raises(DomainError):
        GenSpec(**kw)


@given(st.integers(1, 30), st.integers(0, 2**64 - 1), st.sampled_from([2.0, 3.0, 10.0]))
def test_random_ultra_is_ultra_with_level_heights(n, seed, base):
    u = random_ultra(n, seed, base)
    assert validate_metric(u).is_ultrametric
    for v in np.unique(u.dist[u.dist > 0]):
        level = -np.log(v) / np.log(base)
        assert level == pytest.approx(round(level), abs=1e-9)


@given(st.sampled_from(["random_ultra", "random_metric"]), st.integers(1, 20), st.integers(0, 2**64 - 1))
def test_same_spec_same_bits(kind, n, seed):
    spec = GenSpec(kind, n=n, seed=seed)
    assert generate(spec).dist.tobytes() == generate(spec).dist.tobytes()


def test_different_seeds_differ():
    assert not np.array_equal(generate(GenSpec("random_metric", n=5, seed=1)).dist, generate(GenSpec("random_metric", n=5, seed=2)).dist)


@given(st.integers(2, 12), st.integers(0, 2**32))
def test_cantor_code_separates_points(n, seed):
    code = cantor_code(random_ultra(n, seed))
    assert len(set(code.values())) == n
    assert len({len(c) for c in code.values()}) == 1


def test_cantor_code_needs_ultrametric():
    with pytest.raises(DomainError):
        cantor_code(line(3))


def test_hamming():
    assert code_hamming("1100", "1010") == 2

"""Seeded fixture generators and the binary ball code of an ultrametric.

Randomness comes from :class:`XorShift64Star` so fixtures can be reproduced
bit for bit by any implementation:

* seeding: ``state = splitmix64(seed)`` (``state = 1`` if that yields 0)
* step:    ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27``  (mod 2**64)
* output:  ``x * 0x2545F4914F6CDD1D mod 2**64``
* float:   ``(output >> 11) * 2**-53`` in ``[0, 1)``
* integer below n: ``output % n``
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FinMetricSpace, require_metric
from .errors import CapacityError, DomainError

MASK64 = (1 << 64) - 1
MAX_CANTOR_DEPTH = 12


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        self.state = splitmix64(seed & MASK64) or 1

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def below(self, n: int) -> int:
        return self.next_u64() % n

    def shuffle(self, seq: list) -> None:
        for i in range(len(seq) - 1, 0, -1):
            j = self.below(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def sample(self, seq, k: int) -> list:
        pool = list(seq)
        self.shuffle(pool)
        return pool[:k]


@dataclass(frozen=True)
class GenSpec:
    kind: str
    n: int = 0
    m: int = 0
    depth: int = 0
    step: float = 1.0
    seed: int = 0
    height_base: float = 2.0
    ambient_dim: int = 2

    def __post_init__(self):
        if self.kind == "cantor":
            if not 0 <= self.depth <= MAX_CANTOR_DEPTH:
                raise CapacityError(f"cantor depth must be in [0, {MAX_CANTOR_DEPTH}]")
        elif self.kind in ("line", "random_ultra", "random_metric"):
            if self.n < 1:
                raise DomainError("n must be positive")
        elif self.kind == "grid":
            if self.n < 1 or self.m < 1:
                raise DomainError("grid sides must be positive")
        else:
            raise DomainError(f"unknown fixture kind {self.kind!r}")
        if self.kind in ("line", "grid") and not self.step > 0:
            raise DomainError("step must be positive")
        if self.kind == "random_ultra" and not self.height_base > 1:
            raise DomainError("height_base must exceed 1")
        if self.kind == "random_metric" and self.ambient_dim < 1:
            raise DomainError("ambient_dim must be positive")


def cantor(depth: int) -> FinMetricSpace:
    """Left endpoints of the ``2**depth`` middle-thirds intervals at ``depth``.

    Labels are the ternary-digit addresses as bit strings (``"c"`` for depth 0).
    """
    if not 0 <= depth <= MAX_CANTOR_DEPTH:
        raise CapacityError(f"cantor depth must be in [0, {MAX_CANTOR_DEPTH}]")
    labels, numer = [], []
    for code in range(2**depth):
        bits = format(code, f"0{depth}b") if depth else ""
        # point = numer / 3**depth exactly
        numer.append(sum(2 * 3 ** (depth - k - 1) for k, b in enumerate(bits) if b == "1"))
        labels.append("c" + bits)
    numer = np.array(numer, dtype=np.int64)
    # integer gaps and the power of three are exact floats, so one division rounds once
    dist = np.abs(numer[:, None] - numer[None, :]).astype(float) / float(3**depth)
    return FinMetricSpace(tuple(labels), dist)


def line(n: int, step: float = 1.0) -> FinMetricSpace:
    idx = np.arange(n)
    return FinMetricSpace(tuple(f"x{i}" for i in range(n)), np.abs(idx[:, None] - idx[None, :]) * float(step))


def grid(n: int, m: int, step: float = 1.0) -> FinMetricSpace:
    pts = np.array([(i, j) for i in range(n) for j in range(m)], dtype=float) * step
    diff = pts[:, None, :] - pts[None, :, :]
    labels = tuple(f"g{i}_{j}" for i in range(n) for j in range(m))
    return FinMetricSpace(labels, np.sqrt((diff**2).sum(axis=2)))


def random_ultra(n: int, seed: int, height_base: float = 2.0, labels=None) -> FinMetricSpace:
    """Ultrametric of a random recursive bipartition tree.

    Points separated at tree depth ``l`` are at distance ``height_base**-l``.
    Each block is shuffled and cut at a uniform position in ``1..size-1``.
    """
    rng = XorShift64Star(seed)
    labels = tuple(labels) if labels is not None else tuple(f"p{i}" for i in range(n))
    if len(labels) != n:
        raise DomainError("label count must equal n")
    dist = np.zeros((n, n))
    stack = [(list(range(n)), 0)]
    while stack:
        block, level = stack.pop()
        if len(block) < 2:
            continue
        rng.shuffle(block)
        cut = 1 + rng.below(len(block) - 1)
        left, right = sorted(block[:cut]), sorted(block[cut:])
        h = height_base ** -level
        for i in left:
            for j in right:
                dist[i, j] = dist[j, i] = h
        stack.append((right, level + 1))
        stack.append((left, level + 1))
    return FinMetricSpace(labels, dist)


def random_points(n: int, seed: int, ambient_dim: int = 2) -> np.ndarray:
    rng = XorShift64Star(seed)
    return np.array([[rng.random() for _ in range(ambient_dim)] for _ in range(n)])


def random_metric(n: int, seed: int, ambient_dim: int = 2, labels=None) -> FinMetricSpace:
    """Euclidean distances of ``n`` seeded points in the unit cube."""
    pts = random_points(n, seed, ambient_dim)
    diff = pts[:, None, :] - pts[None, :, :]
    labels = tuple(labels) if labels is not None else tuple(f"p{i}" for i in range(n))
    if len(labels) != n:
        raise DomainError("label count must equal n")
    return FinMetricSpace(labels, np.sqrt((diff**2).sum(axis=2)))


def generate(spec: GenSpec) -> FinMetricSpace:
    if spec.kind == "cantor":
        return cantor(spec.depth)
    if spec.kind == "line":
        return line(spec.n, spec.step)
    if spec.kind == "grid":
        return grid(spec.n, spec.m, spec.step)
    if spec.kind == "random_ultra":
        return random_ultra(spec.n, spec.seed, spec.height_base)
    return random_metric(spec.n, spec.seed, spec.ambient_dim)


def closed_balls(m: FinMetricSpace) -> list[frozenset]:
    """All distinct closed balls ``B(x, d(x, y))`` of ``m``, in a fixed order."""
    n = len(m)
    seen: dict = {}
    for i in range(n):
        for radius in sorted(set(m.dist[i].tolist())):
            ball = frozenset(j for j in range(n) if m.dist[i, j] <= radius)
            seen.setdefault(ball, None)
    return sorted(seen, key=lambda b: (-len(b), sorted(b)))


def cantor_code(m: FinMetricSpace) -> dict:
    """Map each label to the membership bits of every closed ball of ``m``.

    In an ultrametric the closed balls are clopen and form a base, so these
    indicator bits separate points.
    """
    require_metric(m, ultra=True, what="cantor_code input")
    balls = closed_balls(m)
    return {
        lab: "".join("1" if i in b else "0" for b in balls) for i, lab in enumerate(m.labels)
    }


def code_hamming(a: str, b: str) -> int:
    return sum(x != y for x, y in zip(a, b))

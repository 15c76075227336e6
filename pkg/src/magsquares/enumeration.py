"""Ground-truth oracles: transfer-matrix counting and exhaustive enumeration.

``transfer_count_H`` fills the square one column at a time.  Rows are
interchangeable apart from how much of their line sum is still unused, so
the DP state is the vector (m_0, ..., m_r) where m_k is the number of rows
with residual k.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Callable, Iterator

from .permutation import ComponentSpectrum
from .series import CountTable

__all__ = [
    "DEFAULT_ENUM_CAP",
    "DEFAULT_STATE_CAP",
    "MagicalSquare",
    "PmfTable",
    "ResourceCapExceeded",
    "UnionFind",
    "count_table",
    "enumerate_matrices",
    "exact_statistic_pmf",
    "spectrum_histogram",
    "spectrum_of",
    "statistic_from_name",
    "transfer_count_H",
]

DEFAULT_ENUM_CAP = 10**6
DEFAULT_STATE_CAP = 2_000_000


class ResourceCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class MagicalSquare:
    """n x n nonnegative integer matrix with all line sums r (1-based, sparse)."""

    n: int
    r: int
    entries: tuple[tuple[tuple[int, int], int], ...]

    def __post_init__(self):
        items = tuple(sorted(((int(i), int(j)), int(v)) for (i, j), v in dict(self.entries).items() if v))
        rows = [0] * (self.n + 1)
        cols = [0] * (self.n + 1)
        for (i, j), v in items:
            if not (1 <= i <= self.n and 1 <= j <= self.n) or not 1 <= v <= self.r:
                raise ValueError(f"bad entry a[{i},{j}] = {v} for n={self.n}, r={self.r}")
            rows[i] += v
            cols[j] += v
        if any(s != self.r for s in rows[1:]) or any(s != self.r for s in cols[1:]):
            raise ValueError(f"line sums must all equal r={self.r}")
        object.__setattr__(self, "entries", items)

    @classmethod
    def from_dense(cls, rows, r: int | None = None) -> "MagicalSquare":
        n = len(rows)
        r = sum(rows[0]) if r is None else r
        return cls(n, r, tuple(((i + 1, j + 1), v) for i, row in enumerate(rows)
                               for j, v in enumerate(row) if v))

    def to_dense(self) -> list[list[int]]:
        out = [[0] * self.n for _ in range(self.n)]
        for (i, j), v in self.entries:
            out[i - 1][j - 1] = v
        return out

    def __getitem__(self, ij: tuple[int, int]) -> int:
        return dict(self.entries).get(ij, 0)


class UnionFind:
    """Disjoint sets over 0..size-1 with path halving and union by size."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.size = [1] * size

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def spectrum_of(A: MagicalSquare) -> ComponentSpectrum:
    """Irreducible components = connected components of the bipartite multigraph.

    Rows are vertices 0..n-1 and columns n..2n-1; a component with k rows has
    2k vertices.
    """
    n = A.n
    uf = UnionFind(2 * n)
    for (i, j), _ in A.entries:
        uf.union(i - 1, n + j - 1)
    rows_per_root = Counter(uf.find(i) for i in range(n))
    return ComponentSpectrum.from_sizes(n, rows_per_root.values())


@lru_cache(maxsize=None)
def _placements(r: int) -> tuple[tuple[tuple[tuple[int, int], int], ...], ...]:
    # Ways one column can spend its sum r: multisets of (residual class k,
    # entry e) with 1 <= e <= k <= r and total entry sum r.
    pairs = [(k, e) for k in range(1, r + 1) for e in range(1, k + 1)]
    out = []

    def rec(idx: int, remaining: int, acc: list):
        if remaining == 0:
            out.append(tuple(acc))
            return
        if idx == len(pairs):
            return
        k, e = pairs[idx]
        for mult in range(remaining // e, -1, -1):
            if mult:
                acc.append(((k, e), mult))
            rec(idx + 1, remaining - mult * e, acc)
            if mult:
                acc.pop()

    rec(0, r, [])
    return tuple(out)


def transfer_count_H(n: int, r: int, state_cap: int = DEFAULT_STATE_CAP) -> int:
    """|M(n, r)| exactly by column-by-column DP over residual row-sum classes."""
    if n < 0 or r < 0:
        raise ValueError(f"need n, r >= 0, got n={n}, r={r}")
    if n == 0 or r == 0:
        return 1
    placements = _placements(r)
    start = tuple([0] * r + [n])
    layer: dict[tuple[int, ...], int] = {start: 1}
    for _col in range(n):
        nxt: dict[tuple[int, ...], int] = {}
        for state, ways in layer.items():
            for placement in placements:
                used = [0] * (r + 1)
                for (k, _e), mult in placement:
                    used[k] += mult
                if any(used[k] > state[k] for k in range(1, r + 1)):
                    continue
                # labelled rows: choose which rows of class k take each entry
                w = ways
                new = list(state)
                for k in range(1, r + 1):
                    if not used[k]:
                        continue
                    free = state[k]
                    for (kk, e), mult in placement:
                        if kk != k:
                            continue
                        w *= comb(free, mult)
                        free -= mult
                        new[k] -= mult
                        new[k - e] += mult
                key = tuple(new)
                nxt[key] = nxt.get(key, 0) + w
        if len(nxt) > state_cap:
            raise ResourceCapExceeded(
                f"transfer DP for n={n}, r={r} needs {len(nxt)} states (cap {state_cap})")
        layer = nxt
    return layer.get(tuple([n] + [0] * r), 0)


def count_table(r: int, max_n: int, state_cap: int = DEFAULT_STATE_CAP) -> CountTable:
    """H(0..max_n, r) via the transfer DP."""
    return CountTable(r, {k: transfer_count_H(k, r, state_cap) for k in range(max_n + 1)})


def _row_fillings(cols: list[int], r: int, start: int = 0) -> Iterator[tuple[int, ...]]:
    # lexicographically increasing vectors v with sum r and v[j] <= cols[j]
    n = len(cols)
    if start == n - 1:
        if r <= cols[start]:
            yield (r,)
        return
    if r > sum(cols[start:]):
        return
    for v in range(0, min(r, cols[start]) + 1):
        for tail in _row_fillings(cols, r - v, start + 1):
            yield (v,) + tail


def enumerate_matrices(n: int, r: int, cap: int = DEFAULT_ENUM_CAP) -> Iterator[MagicalSquare]:
    """Every element of M(n, r) once, in row-major lexicographic order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = transfer_count_H(n, r)
    if total > cap:
        raise ResourceCapExceeded(f"|M({n},{r})| = {total} exceeds enumeration cap {cap}")
    return _enumerate(n, r)


def _enumerate(n: int, r: int) -> Iterator[MagicalSquare]:
    rows: list[tuple[int, ...]] = []

    def rec(cols: list[int]):
        if len(rows) == n - 1:
            last = tuple(cols)
            yield MagicalSquare.from_dense(rows + [last], r)
            return
        for row in _row_fillings(cols, r):
            rows.append(row)
            yield from rec([c - v for c, v in zip(cols, row)])
            rows.pop()

    yield from rec([r] * n)


def spectrum_histogram(n: int, r: int, cap: int = DEFAULT_ENUM_CAP) -> Counter:
    """Counter {ComponentSpectrum: number of squares} over all of M(n, r)."""
    return Counter(spectrum_of(A) for A in enumerate_matrices(n, r, cap))


@dataclass(frozen=True)
class PmfTable:
    support: tuple
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if any(p < 0 for p in self.probs) or sum(self.probs) != 1:
            raise ValueError("probabilities must be nonnegative and sum to 1")

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probs))

    def mean(self) -> Fraction:
        return sum((Fraction(v) * p for v, p in zip(self.support, self.probs)), Fraction(0))

    def __getitem__(self, value) -> Fraction:
        return self.as_dict().get(value, Fraction(0))


def statistic_from_name(name: str) -> Callable[[ComponentSpectrum], int]:
    """'S' smallest, 'L' largest, 'C' number of components, 'chi_k' count of k-components."""
    key = name.strip()
    if key in ("S", "smallest"):
        return lambda s: s.smallest
    if key in ("L", "largest"):
        return lambda s: s.largest
    if key in ("C", "components"):
        return lambda s: s.total
    if key.startswith("chi_"):
        k = int(key[4:])
        return lambda s: s[k]
    raise ValueError(f"unknown statistic {name!r}")


def exact_statistic_pmf(n: int, r: int, statistic: str | Callable, cap: int = DEFAULT_ENUM_CAP) -> PmfTable:
    """Exact law of a spectrum statistic under Uniform(M(n, r)) by enumeration."""
    stat = statistic_from_name(statistic) if isinstance(statistic, str) else statistic
    hist = spectrum_histogram(n, r, cap)
    total = sum(hist.values())
    acc: Counter = Counter()
    for spec, cnt in hist.items():
        acc[stat(spec)] += cnt
    support = tuple(sorted(acc))
    return PmfTable(support, tuple(Fraction(acc[v], total) for v in support))

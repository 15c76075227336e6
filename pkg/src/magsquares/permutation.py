"""Permutations of [n] with 1-based labels, cycle types and uniform sampling.

The cycle type of a permutation and the component spectrum of a magical
square are the same kind of object (a count vector ``a`` with
``sum(i * a[i]) == n``), so both are represented by :class:`ComponentSpectrum`.
Spectra are stored sparsely because a uniform permutation of size ``n`` has
only about ``log n`` cycles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ComponentSpectrum",
    "CycleType",
    "Permutation",
    "compose_with_inverse",
    "cycle_type",
    "make_rng",
    "sample_uniform_permutation",
]


def make_rng(seed=None) -> np.random.Generator:
    """Return a PCG64 generator; accepts an int, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Permutation:
    """A bijection of [n]; ``images[i - 1]`` is the image of ``i``."""

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(v) for v in self.images)
        n = len(images)
        if n == 0:
            raise ValueError("a permutation needs n >= 1")
        if sorted(images) != list(range(1, n + 1)):
            raise ValueError(f"not a permutation of [1..{n}]: {images}")
        object.__setattr__(self, "images", images)

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        """Build from cycle notation, e.g. ``from_cycles(4, [(1, 2)])``."""
        images = list(range(1, n + 1))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                images[a - 1] = b
        return cls(tuple(images))

    @classmethod
    def from_array(cls, arr) -> "Permutation":
        """Build from a 0-based numpy image array."""
        return cls(tuple(int(v) + 1 for v in arr))

    def to_array(self) -> np.ndarray:
        """0-based image array."""
        return np.asarray(self.images, dtype=np.int64) - 1

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.images, start=1):
            inv[j - 1] = i
        return Permutation(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * (self.n + 1)
        out = []
        for start in range(1, self.n + 1):
            if seen[start]:
                continue
            cyc = []
            j = start
            while not seen[j]:
                seen[j] = True
                cyc.append(j)
                j = self.images[j - 1]
            out.append(tuple(cyc))
        return out


@dataclass(frozen=True)
class ComponentSpectrum:
    """Count vector (a_1, ..., a_n) with sum(i * a_i) == n, stored sparsely.

    ``parts`` maps a size ``k`` to the (positive) number of parts of size
    ``k``.  For a permutation these are cycle counts c_k; for a magical
    square they are the irreducible-component counts chi_k.
    """

    n: int
    parts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        parts = tuple(sorted((int(k), int(c)) for k, c in dict(self.parts).items() if c))
        if any(k < 1 or k > self.n or c < 0 for k, c in parts):
            raise ValueError(f"invalid parts {parts} for n={self.n}")
        if sum(k * c for k, c in parts) != self.n:
            raise ValueError(f"sum of i*a_i must equal n={self.n}, got parts {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "ComponentSpectrum":
        """From the dense vector (a_1, ..., a_n)."""
        n = len(counts)
        return cls(n, tuple((i, c) for i, c in enumerate(counts, start=1) if c))

    @classmethod
    def from_mapping(cls, n: int, parts: Mapping[int, int]) -> "ComponentSpectrum":
        return cls(n, tuple(parts.items()))

    @classmethod
    def from_sizes(cls, n: int, sizes: Iterable[int]) -> "ComponentSpectrum":
        """From the list of part sizes (cycle lengths / component sizes)."""
        acc: dict[int, int] = {}
        for s in sizes:
            acc[int(s)] = acc.get(int(s), 0) + 1
        return cls(n, tuple(acc.items()))

    @property
    def counts(self) -> tuple[int, ...]:
        dense = [0] * self.n
        for k, c in self.parts:
            dense[k - 1] = c
        return tuple(dense)

    def __getitem__(self, k: int) -> int:
        for size, c in self.parts:
            if size == k:
                return c
        return 0

    def as_dict(self) -> dict[int, int]:
        return dict(self.parts)

    @property
    def total(self) -> int:
        """Number of parts, C = sum a_k."""
        return sum(c for _, c in self.parts)

    @property
    def fixed(self) -> int:
        """a_1 (fixed points / 1-components)."""
        return self[1]

    @property
    def nontrivial(self) -> int:
        """C - a_1, the number of parts of size at least 2."""
        return self.total - self.fixed

    @property
    def smallest(self) -> int:
        return self.parts[0][0]

    @property
    def largest(self) -> int:
        return self.parts[-1][0]


CycleType = ComponentSpectrum


def sample_uniform_permutation(n: int, rng) -> Permutation:
    """Uniform element of S_n (numpy's unbiased Fisher-Yates shuffle)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return Permutation.from_array(make_rng(rng).permutation(n))


def cycle_type(p: Permutation) -> ComponentSpectrum:
    return ComponentSpectrum.from_sizes(p.n, (len(c) for c in p.cycles()))


def compose_with_inverse(red: Permutation, blue: Permutation) -> Permutation:
    """sigma = red o blue^{-1}, i.e. sigma(j) = red(blue^{-1}(j))."""
    if red.n != blue.n:
        raise ValueError(f"size mismatch: {red.n} vs {blue.n}")
    binv = blue.inverse()
    return Permutation(tuple(red(binv(j)) for j in range(1, red.n + 1)))

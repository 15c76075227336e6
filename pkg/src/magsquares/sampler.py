"""Sampling M(n, 2) through pairs of permutations.

A 2-regular bipartite multigraph whose edges are coloured so that every
vertex has one blue and one red edge is the same thing as a pair of
permutations (blue, red).  Forgetting the colours maps such a pair onto
M(n, 2); a square with spectrum chi has 2^(C - chi_1) colourings.  Sampling
uniform pairs and weighting by 2^-(C - chi_1) therefore targets the uniform
law on M(n, 2), and the spectrum of the square is the cycle type of
red o blue^{-1}, so large-n runs never build the matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from . import _kernels
from .enumeration import MagicalSquare, ResourceCapExceeded
from .permutation import (
    ComponentSpectrum,
    Permutation,
    compose_with_inverse,
    cycle_type,
    make_rng,
)

__all__ = [
    "ColoredGraph",
    "ENGINES",
    "EstimateReport",
    "Statistic",
    "draw_cycle_lengths",
    "expected_ess_fraction",
    "importance_estimate",
    "parse_statistic",
    "project",
    "rejection_sample_spectrum",
    "rejection_sample_uniform",
    "sample_colored",
    "weight",
    "report_from_samples",
    "weighted_ks",
    "weighted_pmf",
    "weighted_samples",
]

ENGINES = ("pairs", "cycles")
# entries of cycle-length scratch per batch; bounds memory at ~16 MB
_BATCH_CELLS = 1 << 21


@dataclass(frozen=True)
class ColoredGraph:
    """Element of M*(n, 2): blue(i) = j iff the blue edge at row i ends at column j."""

    blue: Permutation
    red: Permutation

    def __post_init__(self):
        if self.blue.n != self.red.n:
            raise ValueError("blue and red must act on the same [n]")

    @property
    def n(self) -> int:
        return self.blue.n


def sample_colored(n: int, rng) -> ColoredGraph:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = make_rng(rng)
    blue = Permutation.from_array(rng.permutation(n))
    red = Permutation.from_array(rng.permutation(n))
    return ColoredGraph(blue, red)


def project(g: ColoredGraph) -> tuple[MagicalSquare, ComponentSpectrum]:
    """Forget colours: a_ij = [blue(i) = j] + [red(i) = j]."""
    entries: dict[tuple[int, int], int] = {}
    for i in range(1, g.n + 1):
        for p in (g.blue, g.red):
            key = (i, p(i))
            entries[key] = entries.get(key, 0) + 1
    A = MagicalSquare(g.n, 2, tuple(entries.items()))
    return A, cycle_type(compose_with_inverse(g.red, g.blue))


def weight(spectrum: ComponentSpectrum) -> Fraction:
    """2^-(C - chi_1): one over the number of colourings of the square."""
    return Fraction(1, 1 << spectrum.nontrivial)


# ---------------------------------------------------------------- statistics

def _seg_sum(mask, offsets):
    c = np.concatenate(([0], np.cumsum(mask, dtype=np.int64)))
    return c[offsets[1:]] - c[offsets[:-1]]


@dataclass(frozen=True)
class Statistic:
    """A function of the spectrum, optionally with a vectorized batch form.

    ``of_batch(lengths, offsets, n)`` receives the flat cycle lengths of a
    batch and the segment offsets, and returns one value per sample.
    """

    name: str
    of_spectrum: Callable[[ComponentSpectrum], float]
    of_batch: Callable | None = None

    def __call__(self, spectrum: ComponentSpectrum) -> float:
        return self.of_spectrum(spectrum)


def _base_statistic(name: str) -> Statistic:
    if name in ("one", "1"):
        return Statistic(name, lambda s: 1.0,
                         lambda L, off, n: np.ones(len(off) - 1))
    if name in ("components", "C"):
        return Statistic(name, lambda s: float(s.total),
                         lambda L, off, n: np.diff(off).astype(float))
    if name in ("smallest", "S"):
        return Statistic(name, lambda s: float(s.smallest),
                         lambda L, off, n: np.minimum.reduceat(L, off[:-1]).astype(float))
    if name in ("largest", "L"):
        return Statistic(name, lambda s: float(s.largest),
                         lambda L, off, n: np.maximum.reduceat(L, off[:-1]).astype(float))
    if name.startswith("chi_"):
        k = int(name[4:])
        return Statistic(name, lambda s: float(s[k]),
                         lambda L, off, n: _seg_sum(L == k, off).astype(float))
    if name.startswith("largest_frac_moment_"):
        m = int(name.rsplit("_", 1)[1])
        return Statistic(name, lambda s: (s.largest / s.n) ** m,
                         lambda L, off, n: (np.maximum.reduceat(L, off[:-1]) / n) ** m)
    if name in ("components_normalized", "clt"):
        def z(c, n):
            mu = 0.5 * math.log(n)
            return (c - mu) / math.sqrt(mu)
        return Statistic(name, lambda s: z(s.total, s.n),
                         lambda L, off, n: z(np.diff(off).astype(float), n))
    raise ValueError(f"unknown statistic {name!r}")


def parse_statistic(name: str) -> Statistic:
    """Resolve a statistic name; ``base=v`` gives the indicator 1{base == v}.

    Base names: one, components (C), smallest (S), largest (L), chi_k,
    largest_frac_moment_m, components_normalized.
    """
    name = name.strip()
    if "=" in name:
        base_name, _, val = name.partition("=")
        base = _base_statistic(base_name.strip())
        v = float(val)
        return Statistic(name, lambda s: float(base(s) == v),
                         lambda L, off, n: (base.of_batch(L, off, n) == v).astype(float))
    return _base_statistic(name)


# ------------------------------------------------------------ batch drawing

def _batch_size(n: int) -> int:
    return max(1, _BATCH_CELLS // n)


def draw_cycle_lengths(n: int, count: int, rng, engine: str = "pairs"):
    """Cycle lengths of red o blue^{-1} for ``count`` independent colored graphs.

    Returns ``(lengths, offsets)``: sample b owns
    ``lengths[offsets[b]:offsets[b + 1]]``.  The "pairs" engine draws two
    uniform permutations per sample and composes them; "cycles" draws the
    cycle type of a uniform permutation directly (same law, O(log n) work).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = make_rng(rng)
    out_len = np.empty(count * n, np.int64)
    out_off = np.empty(count + 1, np.int64)
    if engine == "pairs":
        base = np.tile(np.arange(n, dtype=np.int64), (count, 1))
        blue = rng.permuted(base, axis=1)
        red = rng.permuted(base, axis=1)
        used = _kernels.pair_cycle_lengths(blue, red, out_len, out_off)
    elif engine == "cycles":
        used = _kernels.direct_cycle_lengths(rng, n, count, out_len, out_off)
    else:
        raise ValueError(f"unknown engine {engine!r}; pick one of {ENGINES}")
    return out_len[:used], out_off


def iter_batches(n: int, N: int, rng, engine: str = "pairs") -> Iterator[tuple[np.ndarray, np.ndarray]]:
    rng = make_rng(rng)
    step = _batch_size(n)
    done = 0
    while done < N:
        b = min(step, N - done)
        yield draw_cycle_lengths(n, b, rng, engine)
        done += b


def batch_weights(lengths: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    nontrivial = np.diff(offsets) - _seg_sum(lengths == 1, offsets)
    return np.ldexp(1.0, -nontrivial)


# --------------------------------------------------------------- estimation

def _exact(x: float) -> Fraction:
    return Fraction(x)


def _decimal_str(q: Fraction, digits: int = 40) -> str:
    with localcontext() as ctx:
        ctx.prec = digits
        return str(Decimal(q.numerator) / Decimal(q.denominator))


def _seed_of(rng) -> int | None:
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    if isinstance(rng, np.random.SeedSequence) and isinstance(rng.entropy, int):
        return rng.entropy
    return None


@dataclass
class EstimateReport:
    """Importance-sampling sums for E h(A), A ~ Uniform(M(n, 2)).

    Sums are exact rationals: each batch is added with math.fsum and the
    batch totals are accumulated exactly, so reports merge associatively.
    """

    statistic: str
    n: int
    sample_count: int = 0
    raw_weighted_sum: Fraction = Fraction(0)
    weight_sum: Fraction = Fraction(0)
    weight_sq_sum: Fraction = Fraction(0)
    seed: int | None = None
    normalizer: Fraction | None = None
    engine: str = "pairs"
    samples: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def estimate(self) -> float | None:
        """(1/N) (n!)^2 / H(n, 2) sum h w, or None without an exact H."""
        if self.normalizer is None or not self.sample_count:
            return None
        return float(self.normalizer * self.raw_weighted_sum / self.sample_count)

    @property
    def self_normalized(self) -> float:
        return float(self.raw_weighted_sum / self.weight_sum)

    @property
    def ess(self) -> float:
        return float(self.weight_sum ** 2 / self.weight_sq_sum)

    def add_batch(self, values: np.ndarray, weights: np.ndarray) -> None:
        self.sample_count += len(weights)
        self.raw_weighted_sum += _exact(math.fsum(values * weights))
        self.weight_sum += _exact(math.fsum(weights))
        self.weight_sq_sum += _exact(math.fsum(weights * weights))

    def merge(self, other: "EstimateReport") -> "EstimateReport":
        if (self.statistic, self.n) != (other.statistic, other.n):
            raise ValueError("can only merge reports for the same statistic and n")
        return EstimateReport(
            self.statistic, self.n,
            self.sample_count + other.sample_count,
            self.raw_weighted_sum + other.raw_weighted_sum,
            self.weight_sum + other.weight_sum,
            self.weight_sq_sum + other.weight_sq_sum,
            self.seed if self.seed == other.seed else None,
            self.normalizer if self.normalizer is not None else other.normalizer,
            self.engine,
        )

    def to_dict(self) -> dict:
        est = self.estimate
        return {
            "statistic": self.statistic,
            "n": self.n,
            "sample_count": self.sample_count,
            "engine": self.engine,
            "seed": self.seed,
            "raw_weighted_sum": _decimal_str(self.raw_weighted_sum),
            "weight_sum": _decimal_str(self.weight_sum),
            "weight_sq_sum": _decimal_str(self.weight_sq_sum),
            "raw_available": est is not None,
            "estimate": None if est is None else repr(est),
            "self_normalized": repr(self.self_normalized),
            "ess": repr(self.ess),
        }


def importance_estimate(h, n: int, N: int, rng=None, H_value: int | None = None,
                        engine: str = "pairs", keep_samples: bool = False) -> EstimateReport:
    """Estimate E h(A) for A ~ Uniform(M(n, 2)) from N weighted colored graphs.

    ``h`` is a statistic name, a :class:`Statistic`, or any callable on
    :class:`ComponentSpectrum`.  With ``H_value = H(n, 2)`` the unbiased raw
    estimate is reported too; the self-normalized one never needs it.
    With ``keep_samples`` the per-sample (values, weights) arrays are kept on
    the report.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    stat = parse_statistic(h) if isinstance(h, str) else h
    name = getattr(stat, "name", getattr(stat, "__name__", "h"))
    normalizer = None
    if H_value is not None:
        normalizer = Fraction(math.factorial(n) ** 2, int(H_value))
    report = EstimateReport(name, n, seed=_seed_of(rng), normalizer=normalizer, engine=engine)
    kept_v, kept_w = [], []
    for lengths, offsets in iter_batches(n, N, rng, engine):
        w = batch_weights(lengths, offsets)
        if isinstance(stat, Statistic) and stat.of_batch is not None:
            vals = np.asarray(stat.of_batch(lengths, offsets, n), dtype=float)
        else:
            vals = np.array([
                float(stat(ComponentSpectrum.from_sizes(n, lengths[offsets[b]:offsets[b + 1]])))
                for b in range(len(offsets) - 1)])
        report.add_batch(vals, w)
        if keep_samples:
            kept_v.append(vals)
            kept_w.append(w)
    if keep_samples:
        report.samples = (np.concatenate(kept_v), np.concatenate(kept_w))
    return report


def expected_ess_fraction(n: int) -> float:
    """Large-N limit of ESS / N at size n: E[w]^2 / E[w^2].

    Over uniform colored pairs, red o blue^{-1} is a uniform permutation and
    w = 2^-(cycles of length >= 2), so E[w] = [x^n] e^{x/2} (1 - x)^{-1/2}
    and E[w^2] = [x^n] e^{3x/4} (1 - x)^{-1/4}.  Both satisfy
    c_{k+1} = c_k - a c_{k-1} / (k + 1) with a = 1/2 and 3/4.  The ratio
    decays like n^{-1/4}.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    b0, b1, g0, g1 = 1.0, 1.0, 1.0, 1.0
    for k in range(1, n):
        b0, b1 = b1, b1 - 0.5 * b0 / (k + 1)
        g0, g1 = g1, g1 - 0.75 * g0 / (k + 1)
    return b1 * b1 / g1 if n else 1.0


def weighted_samples(stats, n: int, N: int, rng=None, engine: str = "pairs"):
    """One pass of N weighted draws evaluated under several statistics.

    Returns ``({name: values}, weights)`` as numpy arrays.
    """
    stats = [parse_statistic(s) if isinstance(s, str) else s for s in stats]
    vals: dict[str, list] = {s.name: [] for s in stats}
    ws = []
    for lengths, offsets in iter_batches(n, N, rng, engine):
        ws.append(batch_weights(lengths, offsets))
        for s in stats:
            vals[s.name].append(np.asarray(s.of_batch(lengths, offsets, n), dtype=float))
    return {k: np.concatenate(v) for k, v in vals.items()}, np.concatenate(ws)


def report_from_samples(name: str, n: int, values: np.ndarray, weights: np.ndarray,
                        seed=None, H_value: int | None = None, engine: str = "pairs") -> EstimateReport:
    normalizer = None if H_value is None else Fraction(math.factorial(n) ** 2, int(H_value))
    rep = EstimateReport(name, n, seed=seed, normalizer=normalizer, engine=engine)
    rep.add_batch(values, weights)
    return rep


def weighted_pmf(values: np.ndarray, weights: np.ndarray) -> dict[float, float]:
    """Self-normalized empirical law of ``values``."""
    uniq, inv = np.unique(values, return_inverse=True)
    mass = np.bincount(inv, weights=weights)
    mass /= mass.sum()
    return dict(zip(uniq.tolist(), mass.tolist()))


def weighted_ks(values: np.ndarray, weights: np.ndarray, cdf: Callable) -> float:
    """sup_x |F_w(x) - cdf(x)| for the weighted empirical cdf F_w (atoms allowed)."""
    uniq, inv = np.unique(values, return_inverse=True)
    mass = np.bincount(inv, weights=weights)
    F = np.cumsum(mass) / mass.sum()
    F_left = np.concatenate(([0.0], F[:-1]))
    G = cdf(uniq)
    return float(max(np.max(np.abs(F - G)), np.max(np.abs(F_left - G))))


# ----------------------------------------------------------------- rejection

def _cycle_lengths_small(blue: np.ndarray, red: np.ndarray) -> list[int]:
    n = len(blue)
    inv = np.empty(n, np.int64)
    inv[blue] = np.arange(n)
    sigma = red[inv].tolist()
    seen = [False] * n
    out = []
    for s in range(n):
        if seen[s]:
            continue
        length, j = 0, s
        while not seen[j]:
            seen[j] = True
            j = sigma[j]
            length += 1
        out.append(length)
    return out


def rejection_sample_spectrum(n: int, rng, max_trials: int = 10**6):
    """Spectrum of an exactly uniform element of M(n, 2), plus trials and the graph.

    A colored graph is accepted with probability 2^-(C - chi_1), realized as
    that many fair coin flips all coming up heads, so acceptance is exact.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = make_rng(rng)
    for trial in range(1, max_trials + 1):
        blue = rng.permutation(n)
        red = rng.permutation(n)
        lengths = _cycle_lengths_small(blue, red)
        k = sum(1 for L in lengths if L > 1)
        if k == 0 or not rng.integers(0, 2, size=k).any():
            return ComponentSpectrum.from_sizes(n, lengths), trial, (blue, red)
    raise ResourceCapExceeded(f"no acceptance within {max_trials} trials (n={n})")


def rejection_sample_uniform(n: int, rng, max_trials: int = 10**6) -> tuple[MagicalSquare, int]:
    """Exactly uniform element of M(n, 2) and the number of trials used."""
    _spec, trials, (blue, red) = rejection_sample_spectrum(n, rng, max_trials)
    g = ColoredGraph(Permutation.from_array(blue), Permutation.from_array(red))
    A, _ = project(g)
    return A, trials

"""Exact truncated power series for magical-square counting.

All counting series use the doubly-exponential normalization: the
coefficient of x^n is ``count / (n!)**2``.  With that convention the number
of magical squares H(n, r) and the number of irreducible ones f(n, r) are
related by ``H-series = exp(f-series)``.

For r >= 3 the H-series has radius of convergence 0.  Nothing here evaluates
a series at a point; everything is a truncated formal object, so that is
harmless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial, prod
from typing import Iterator, Mapping, Sequence

import mpmath

from .permutation import ComponentSpectrum

__all__ = [
    "CountTable",
    "InfeasibleMoment",
    "RationalSeries",
    "beta_r2",
    "f_r2",
    "f_table_from_H",
    "h_r2",
    "h_r2_closed_form",
    "integer_partitions",
    "joint_falling_moment",
    "mixture_pmf_r2",
    "series_exp",
    "series_log",
    "spectra",
    "spectrum_count",
]


class InfeasibleMoment(ValueError):
    """Requested falling moment needs more rows than the square has."""


@dataclass(frozen=True)
class RationalSeries:
    """sum_{k=0}^{cap} coeffs[k] x^k with exact rational coefficients."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        cs = tuple(Fraction(c) for c in self.coeffs)
        if not cs:
            raise ValueError("a series needs at least the constant term")
        object.__setattr__(self, "coeffs", cs)

    @property
    def cap(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k <= self.cap else Fraction(0)

    @classmethod
    def zero(cls, cap: int) -> "RationalSeries":
        return cls((Fraction(0),) * (cap + 1))

    @classmethod
    def from_counts(cls, counts: Mapping[int, int] | Sequence[int], cap: int) -> "RationalSeries":
        """Normalize counts as count_n / (n!)^2; missing n are zero."""
        get = counts.get if isinstance(counts, Mapping) else (
            lambda k, d=0: counts[k] if k < len(counts) else d)
        return cls(tuple(Fraction(get(k, 0), factorial(k) ** 2) for k in range(cap + 1)))

    def counts(self) -> list[int]:
        """Undo the (n!)^2 normalization; raises if a count is not integral."""
        out = []
        for k, c in enumerate(self.coeffs):
            v = c * factorial(k) ** 2
            if v.denominator != 1:
                raise ValueError(f"coefficient {k} is not a count: (k!)^2 c_k = {v}")
            out.append(v.numerator)
        return out

    def truncate(self, cap: int) -> "RationalSeries":
        return RationalSeries(tuple(self[k] for k in range(cap + 1)))

    def __add__(self, other: "RationalSeries") -> "RationalSeries":
        cap = min(self.cap, other.cap)
        return RationalSeries(tuple(self[k] + other[k] for k in range(cap + 1)))

    def __sub__(self, other: "RationalSeries") -> "RationalSeries":
        cap = min(self.cap, other.cap)
        return RationalSeries(tuple(self[k] - other[k] for k in range(cap + 1)))

    def __mul__(self, other) -> "RationalSeries":
        if not isinstance(other, RationalSeries):
            return RationalSeries(tuple(c * other for c in self.coeffs))
        cap = min(self.cap, other.cap)
        a, b = self.coeffs, other.coeffs
        return RationalSeries(tuple(
            sum((a[i] * b[k - i] for i in range(k + 1)), Fraction(0)) for k in range(cap + 1)))

    __rmul__ = __mul__

    def exp(self) -> "RationalSeries":
        return series_exp(self)

    def log(self) -> "RationalSeries":
        return series_log(self)


def series_exp(s: RationalSeries) -> RationalSeries:
    """exp(s) via k e_k = sum_{j=1}^k j s_j e_{k-j}; needs s_0 == 0."""
    if s[0] != 0:
        raise ValueError("series_exp needs a zero constant term")
    c = s.coeffs
    e = [Fraction(1)]
    for k in range(1, s.cap + 1):
        acc = sum((j * c[j] * e[k - j] for j in range(1, k + 1)), Fraction(0))
        e.append(acc / k)
    return RationalSeries(tuple(e))


def series_log(s: RationalSeries) -> RationalSeries:
    """log(s) for s_0 == 1, inverting the recurrence used by series_exp."""
    if s[0] != 1:
        raise ValueError("series_log needs constant term 1")
    c = s.coeffs
    l = [Fraction(0)]
    for k in range(1, s.cap + 1):
        acc = k * c[k] - sum((j * l[j] * c[k - j] for j in range(1, k)), Fraction(0))
        l.append(acc / k)
    return RationalSeries(tuple(l))


@dataclass
class CountTable:
    """Exact counts indexed by n for a fixed line sum r (H or f values)."""

    r: int
    values: dict[int, int] = field(default_factory=dict)
    kind: str = "H"

    def __getitem__(self, n: int) -> int:
        try:
            return self.values[n]
        except KeyError:
            raise KeyError(f"{self.kind}(n={n}, r={self.r}) not in table") from None

    def __contains__(self, n: int) -> bool:
        return n in self.values

    @property
    def max_n(self) -> int:
        return max(self.values, default=-1)

    def series(self, cap: int | None = None) -> RationalSeries:
        cap = self.max_n if cap is None else cap
        missing = [k for k in range(cap + 1) if k not in self.values and not (k == 0 and self.kind == "f")]
        if missing:
            raise KeyError(f"{self.kind} table for r={self.r} lacks n={missing[:5]}")
        return RationalSeries.from_counts(self.values, cap)

    def to_json(self) -> str:
        return json.dumps({"r": self.r, "kind": self.kind,
                           "values": {str(k): str(v) for k, v in sorted(self.values.items())}},
                          indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CountTable":
        d = json.loads(text)
        return cls(int(d["r"]), {int(k): int(v) for k, v in d["values"].items()},
                   d.get("kind", "H"))


def f_table_from_H(H: CountTable, cap: int | None = None) -> CountTable:
    """Irreducible counts f(n, r) = (n!)^2 [x^n] log(H-series)."""
    cap = H.max_n if cap is None else cap
    logs = series_log(H.series(cap))
    counts = logs.counts()
    return CountTable(H.r, {k: counts[k] for k in range(1, cap + 1)}, kind="f")


def f_r2(n: int) -> int:
    """Closed form for connected 2-regular bipartite multigraphs."""
    if n < 1:
        raise ValueError("f(n, 2) is defined for n >= 1")
    return 1 if n == 1 else factorial(n) * factorial(n - 1) // 2


@lru_cache(maxsize=8)
def _sqrt_exp_over_one_minus(cap: int) -> RationalSeries:
    # sqrt(e^x / (1 - x)) = exp(x/2 + (1/2) sum_{k>=1} x^k / k)
    inner = [Fraction(0)] + [Fraction(1, 2 * k) for k in range(1, cap + 1)]
    inner[1] += Fraction(1, 2)
    return series_exp(RationalSeries(tuple(inner)))


def h_r2_closed_form(n: int) -> int:
    """H(n, 2) = (n!)^2 [x^n] sqrt(e^x / (1 - x)), exact."""
    if n < 0:
        raise ValueError("n must be >= 0")
    cap = max(16, 1 << (n.bit_length()))
    c = _sqrt_exp_over_one_minus(cap)[n] * factorial(n) ** 2
    assert c.denominator == 1
    return c.numerator


@lru_cache(maxsize=4)
def h_r2(n: int) -> int:
    """H(n, 2) by the integer recurrence H_k = k^2 H_{k-1} - k (k-1)^2 H_{k-2} / 2.

    Equivalent to (1 - x) B'(x) = (1 - x/2) B(x) for B = sqrt(e^x / (1 - x));
    far cheaper than the series route for n in the thousands.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    a, b = 1, 1  # H(0, 2), H(1, 2)
    if n == 0:
        return a
    for k in range(2, n + 1):
        a, b = b, k * k * b - k * (k - 1) ** 2 * a // 2
    return b


def beta_r2(n: int) -> Fraction:
    """H(n, 2) / (n!)^2 exactly."""
    return Fraction(h_r2(n), factorial(n) ** 2)


def integer_partitions(n: int, max_part: int | None = None) -> Iterator[dict[int, int]]:
    """Partitions of n as {part: multiplicity}, largest parts first."""
    max_part = n if max_part is None else min(max_part, n)
    if n == 0:
        yield {}
        return
    for k in range(max_part, 0, -1):
        for mult in range(n // k, 0, -1):
            for rest in integer_partitions(n - k * mult, k - 1):
                out = {k: mult}
                out.update(rest)
                yield out


def spectra(n: int) -> Iterator[ComponentSpectrum]:
    for p in integer_partitions(n):
        yield ComponentSpectrum.from_mapping(n, p)


def spectrum_count(r: int, spectrum: ComponentSpectrum | Sequence[int], f_table: CountTable) -> int:
    """Number of squares in M(n, r) with exactly a_i irreducible i-components."""
    if not isinstance(spectrum, ComponentSpectrum):
        spectrum = ComponentSpectrum.from_counts(spectrum)
    if f_table.r != r:
        raise ValueError(f"f table is for r={f_table.r}, not r={r}")
    n = spectrum.n
    denom = prod(factorial(i) ** (2 * a) * factorial(a) for i, a in spectrum.parts)
    num = factorial(n) ** 2 * prod(f_table[i] ** a for i, a in spectrum.parts)
    q, rem = divmod(num, denom)
    assert rem == 0
    return q


def joint_falling_moment(n: int, r: int, orders: Sequence[int], H_table: CountTable,
                         f_table: CountTable, allow_infeasible: bool = False) -> Fraction:
    """E prod_m (chi_m)_{(orders[m-1])} under Uniform(M(n, r)), exact.

    If n < sum m * orders[m-1] no square can have that many components, so
    the moment is 0; that case raises :class:`InfeasibleMoment` unless
    ``allow_infeasible`` is set, in which case 0 is returned.
    """
    used = sum(m * o for m, o in enumerate(orders, start=1))
    if any(o < 0 for o in orders):
        raise ValueError(f"orders must be nonnegative: {orders}")
    if used > n:
        if allow_infeasible:
            return Fraction(0)
        raise InfeasibleMoment(f"sum m*r_m = {used} exceeds n = {n}")
    val = Fraction(1)
    for m, o in enumerate(orders, start=1):
        if o:
            val *= Fraction(f_table[m], factorial(m) ** 2) ** o
    rest = n - used
    return val * Fraction(factorial(n) ** 2, H_table[n]) * Fraction(H_table[rest], factorial(rest) ** 2)


def mixture_pmf_r2(x, n: int, dps: int = 60) -> mpmath.mpf:
    """P_x(n) = sqrt(1 - x) e^{-x/2} H(n, 2) x^n / (n!)^2.

    The rational factor is exact; the two irrational prefactors are evaluated
    with ``dps`` significant digits.
    """
    x = Fraction(x)
    if not 0 < x < 1:
        raise ValueError(f"x must lie in (0, 1), got {x}")
    if n < 0:
        raise ValueError("n must be >= 0")
    rational = beta_r2(n) * x ** n
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x.numerator) / x.denominator
        pref = mpmath.sqrt(1 - xm) * mpmath.exp(-xm / 2)
        return +(pref * mpmath.mpf(rational.numerator) / rational.denominator)

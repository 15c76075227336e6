"""Acceptance checks: exact identities on small instances and seeded limit checks.

Each check returns a :class:`CheckResult` with the measured values, so the
CLI ``verify`` command and the test-suite share one implementation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, prod
from typing import Callable

import numpy as np
from scipy import special

from . import limits
from .enumeration import (
    count_table,
    enumerate_matrices,
    spectrum_histogram,
    spectrum_of,
    transfer_count_H,
)
from .sampler import weighted_ks, weighted_pmf, weighted_samples
from .series import (
    CountTable,
    beta_r2,
    f_r2,
    f_table_from_H,
    h_r2_closed_form,
    integer_partitions,
    joint_falling_moment,
    series_exp,
    spectra,
    spectrum_count,
)

PASS, FAIL, SKIPPED = "PASS", "FAIL", "SKIPPED"

SEED_SMALL_COMPONENTS = 20240611
SEED_CLT = 20240612
SEED_LARGEST = 20240613


@dataclass
class CheckResult:
    id: int
    name: str
    status: str
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0
    time_limit: float = math.inf
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def line(self) -> str:
        return (f"[{self.status:7s}] #{self.id:<2d} {self.name} "
                f"({self.seconds:.1f}s / limit {self.time_limit:.0f}s) {self.detail}")

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "status": self.status,
                "seconds": round(self.seconds, 3), "time_limit": self.time_limit,
                "measured": {k: _jsonable(v) for k, v in self.measured.items()},
                "detail": self.detail}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _timed(cid: int, name: str, limit: float, fn: Callable[[dict], tuple[bool, str]]) -> CheckResult:
    measured: dict = {}
    t0 = time.perf_counter()
    try:
        ok, detail = fn(measured)
    except Exception as exc:  # a crashing check is a failed check
        ok, detail = False, f"error: {exc!r}"
    dt = time.perf_counter() - t0
    if ok and dt > limit:
        ok, detail = False, f"{detail}; exceeded time limit"
    return CheckResult(cid, name, PASS if ok else FAIL, measured, dt, limit, detail)


def _skip(cid: int, name: str, limit: float, need: int, budget: int) -> CheckResult:
    return CheckResult(cid, name, SKIPPED, {"samples_needed": need, "budget": budget},
                       0.0, limit, f"needs {need} samples, budget {budget}")


# ------------------------------------------------------------ exact checks

def check_exact_counts() -> CheckResult:
    def run(m):
        bad = []
        for r in range(0, 4):
            for n in range(1, 6):
                t, e = transfer_count_H(n, r), sum(1 for _ in enumerate_matrices(n, r))
                if t != e:
                    bad.append(("enum", n, r, t, e))
        for n in range(0, 26):
            if transfer_count_H(n, 2) != h_r2_closed_form(n):
                bad.append(("closed", n))
        for n in range(0, 9):
            if transfer_count_H(n, 1) != factorial(n) or transfer_count_H(n, 0) != 1:
                bad.append(("r<=1", n))
        pinned = {(2, 2): 3, (3, 2): 21, (2, 3): 4, (3, 3): 55}
        got = {k: transfer_count_H(*k) for k in pinned}
        m["pinned"] = {f"H{k}": v for k, v in got.items()}
        m["mismatches"] = bad
        ok = not bad and got == pinned
        return ok, "transfer DP = enumeration = closed form" if ok else f"mismatches {bad[:3]}"
    return _timed(1, "exact-count cross-validation", 60, run)


def check_exponential_formula() -> CheckResult:
    def run(m):
        bad = []
        for r in (1, 2, 3):
            H = count_table(r, 10)
            f = f_table_from_H(H)
            back = series_exp(f.series(10))
            if back.counts() != [H[k] for k in range(11)]:
                bad.append(("exp(f) != H", r))
            if r == 1 and any(f[k] != (k == 1) for k in range(1, 11)):
                bad.append(("f(n,1)", r))
            if r == 2:
                # independent route: closed-form f through exp against the DP
                closed = CountTable(2, {k: f_r2(k) for k in range(1, 11)}, kind="f")
                if series_exp(closed.series(10)).counts() != [H[k] for k in range(11)]:
                    bad.append(("exp(closed f) != H", 2))
                if any(f[k] != factorial(k) * factorial(k - 1) // 2 for k in range(2, 11)):
                    bad.append(("f(n,2) closed form", 2))
            if r == 3:
                irreducible = {n: sum(1 for A in enumerate_matrices(n, 3) if spectrum_of(A).total == 1)
                               for n in range(1, 6)}
                if any(f[n] != irreducible[n] for n in irreducible):
                    bad.append(("f(n,3) vs enumeration", 3))
            m[f"f_r{r}"] = [f[k] for k in range(1, 11)]
        m["mismatches"] = bad
        return not bad, "series_exp(f) = H exactly for r = 1, 2, 3, n <= 10" if not bad else str(bad)
    return _timed(2, "exponential-formula identity", 60, run)


def check_spectrum_counts() -> CheckResult:
    def run(m):
        bad = []
        for r in (2, 3):
            H = count_table(r, 5)
            f = f_table_from_H(H)
            for n in range(1, 6):
                hist = spectrum_histogram(n, r)
                total = 0
                for spec in spectra(n):
                    c = spectrum_count(r, spec, f)
                    total += c
                    if c != hist.get(spec, 0):
                        bad.append((r, n, spec.parts, c, hist.get(spec, 0)))
                if total != H[n]:
                    bad.append((r, n, "sum", total, H[n]))
        m["mismatches"] = bad
        return not bad, "per-spectrum counts match enumeration" if not bad else str(bad[:3])
    return _timed(3, "spectrum-count identity", 120, run)


def importance_weight_expectation(n: int) -> Fraction:
    """E 2^-(C - c_1) over uniform S_n, summed over cycle types."""
    acc = Fraction(0)
    for p in integer_partitions(n):
        freq = Fraction(factorial(n), prod(i ** c * factorial(c) for i, c in p.items()))
        k = sum(c for i, c in p.items() if i >= 2)
        acc += freq / (1 << k)
    return acc / factorial(n)


def check_importance_identity() -> CheckResult:
    def run(m):
        bad = []
        for n in range(1, 41):
            lhs = importance_weight_expectation(n)
            if lhs != Fraction(transfer_count_H(n, 2), factorial(n) ** 2):
                bad.append(n)
        pinned = importance_weight_expectation(3)
        m["n3_expectation"] = pinned
        m["mismatches"] = bad
        ok = not bad and pinned == Fraction(7, 12) == Fraction(21, 36)
        return ok, f"E[weight] = H(n,2)/(n!)^2 for n <= 40; n=3 gives {pinned}"
    return _timed(4, "importance-weight identity", 60, run)


def _falling(x: int, k: int) -> int:
    return prod(x - i for i in range(k))


def check_falling_moments() -> CheckResult:
    def run(m):
        H = count_table(2, 5)
        f = f_table_from_H(H)
        bad, checked = [], 0
        for n in range(1, 6):
            specs = [spectrum_of(A) for A in enumerate_matrices(n, 2)]
            for used in range(0, n + 1):
                for p in integer_partitions(used):
                    orders = [p.get(k, 0) for k in range(1, n + 1)]
                    exact = joint_falling_moment(n, 2, orders, H, f)
                    avg = Fraction(sum(prod(_falling(s[k], o) for k, o in enumerate(orders, 1))
                                       for s in specs), len(specs))
                    checked += 1
                    if exact != avg:
                        bad.append((n, orders, exact, avg))
        e1 = joint_falling_moment(3, 2, [1], H, f)
        m["E_chi1_n3"] = e1
        m["moments_checked"] = checked
        m["mismatches"] = bad
        ok = not bad and e1 == Fraction(9, 7)
        return ok, f"{checked} joint falling moments exact; E chi_1(n=3) = {e1}"
    return _timed(5, "falling-moment formula", 60, run)


def check_r3_triviality() -> CheckResult:
    def run(m):
        H = count_table(3, 25)
        f = f_table_from_H(H)
        ratio = {n: Fraction(f[n], H[n]) for n in range(1, 26)}
        m["ratio"] = {n: float(v) for n, v in ratio.items()}
        # n = 1 is trivially irreducible (ratio 1); monotone from n = 2 on
        monotone = all(ratio[n + 1] > ratio[n] for n in range(2, 25))
        if ratio[25] > Fraction(99, 100):
            ok, branch = monotone, "ratio(25) > 0.99"
        else:
            ok, branch = monotone and ratio[25] > ratio[10], "fallback: ratio(25) > ratio(10)"
        m["branch"] = branch
        return ok, f"f/H monotone on 2..25 = {monotone}; ratio(25) = {float(ratio[25]):.5f}; {branch}"
    return _timed(10, "r >= 3 triviality", 300, run)


def check_asymptotic_formula() -> CheckResult:
    def run(m):
        H20 = transfer_count_H(20, 3)
        diff = math.log(H20) - limits.H_asymptotic(20, 3).log_factorial_form
        b = beta_r2(100)
        scaled = float(b) * 10.0
        target = math.sqrt(math.e / math.pi)
        m.update(log_diff_n20_r3=diff, beta100_sqrt100=scaled, target=target)
        ok = abs(diff) <= 0.05 and abs(scaled - target) <= 0.01
        return ok, f"|log diff| = {abs(diff):.4f}; |10 beta_100 - sqrt(e/pi)| = {abs(scaled - target):.4f}"
    return _timed(11, "asymptotic formula for H(n, r)", 60, run)


# -------------------------------------------------------- stochastic checks

_SAMPLE_CACHE: dict = {}


def _samples(stats: tuple, n: int, N: int, seed: int):
    key = (stats, n, N, seed)
    if key not in _SAMPLE_CACHE:
        _SAMPLE_CACHE[key] = weighted_samples(list(stats), n, N, np.random.SeedSequence(seed))
    return _SAMPLE_CACHE[key]


_SMALL_STATS = ("chi_1", "chi_2", "smallest")


def tv_to_poisson_limit(pmf: dict, size: int) -> float:
    """Total variation between an empirical law of chi_size and its Poisson limit."""
    kmax = int(max(max(pmf), 40))
    q = [limits.poisson_limit_pmf(size, k) for k in range(kmax + 1)]
    tv = sum(abs(pmf.get(float(k), 0.0) - q[k]) for k in range(kmax + 1))
    return (tv + max(0.0, 1.0 - sum(q))) / 2


def check_poisson_limit(budget: int | None = None) -> CheckResult:
    n, N = 4000, 200_000
    name = "Poisson limit of small components"
    if budget is not None and budget < N:
        return _skip(6, name, 300, N, budget)

    def run(m):
        vals, w = _samples(_SMALL_STATS, n, N, SEED_SMALL_COMPONENTS)
        tv = tv_to_poisson_limit(weighted_pmf(vals["chi_1"], w), 1)
        e2 = float(np.sum(vals["chi_2"] * w) / np.sum(w))
        ess = float(w.sum() ** 2 / np.sum(w * w))
        m.update(n=n, N=N, seed=SEED_SMALL_COMPONENTS, tv_chi1_poisson1=tv, E_chi2=e2, ess=ess)
        ok = tv <= 0.02 and abs(e2 - 0.25) <= 0.03
        return ok, f"TV(chi_1, Poisson(1)) = {tv:.4f}; E chi_2 = {e2:.4f}"
    return _timed(6, name, 300, run)


def check_smallest_component(budget: int | None = None) -> CheckResult:
    n, N = 4000, 200_000
    name = "smallest-component limit"
    if budget is not None and budget < N:
        return _skip(7, name, 300, N, budget)

    def run(m):
        vals, w = _samples(_SMALL_STATS, n, N, SEED_SMALL_COMPONENTS)
        pmf = weighted_pmf(vals["smallest"], w)
        p1, p2 = pmf.get(1.0, 0.0), pmf.get(2.0, 0.0)
        t1, t2 = limits.smallest_limit_pmf(1), limits.smallest_limit_pmf(2)
        m.update(n=n, N=N, P_S1=p1, P_S2=p2, target_S1=t1, target_S2=t2)
        ok = abs(p1 - t1) <= 0.01 and abs(p2 - t2) <= 0.006
        return ok, f"P(S=1) = {p1:.4f} (target {t1:.4f}); P(S=2) = {p2:.4f} (target {t2:.4f})"
    return _timed(7, name, 300, run)


def check_clt(budget: int | None = None) -> CheckResult:
    n, N = 100_000, 50_000
    name = "CLT for the number of components"
    if budget is not None and budget < N:
        return _skip(8, name, 600, N, budget)

    def run(m):
        vals, w = _samples(("components_normalized",), n, N, SEED_CLT)
        ks = weighted_ks(vals["components_normalized"], w, special.ndtr)
        # the same distance for the exact finite-n law, for the record
        law = limits.components_law_r2(n)
        mu, sd = 0.5 * math.log(n), math.sqrt(0.5 * math.log(n))
        support = (np.arange(len(law)) - mu) / sd
        ks_exact = weighted_ks(support, law, special.ndtr)
        m.update(n=n, N=N, seed=SEED_CLT, ks_mc=ks, ks_exact_law=ks_exact,
                 ess=float(w.sum() ** 2 / np.sum(w * w)))
        return ks <= 0.06, f"KS = {ks:.4f} (exact finite-n law: {ks_exact:.4f}; tolerance 0.06)"
    return _timed(8, name, 600, run)


def check_largest_component(budget: int | None = None) -> CheckResult:
    n, N = 5000, 200_000
    name = "largest-component moments"
    if budget is not None and budget < N:
        return _skip(9, name, 600, N, budget)

    def run(m):
        stats = ("largest_frac_moment_1", "largest_frac_moment_2")
        vals, w = _samples(stats, n, N, SEED_LARGEST)
        ok = True
        parts = []
        for k, s in enumerate(stats, start=1):
            q = limits.largest_moment_limit(k)
            q_alt = limits.largest_moment_limit(k, splice=0.5)
            splice_ok = abs(q.value - q_alt.value) <= 1e-8 and q.abs_error_bound <= 1e-8
            est = float(np.sum(vals[s] * w) / np.sum(w))
            m[f"moment_{k}"] = {"quadrature": q.value, "error_bound": q.abs_error_bound,
                                "splice_diff": abs(q.value - q_alt.value), "mc": est}
            ok = ok and splice_ok and abs(est - q.value) <= 0.015
            parts.append(f"m={k}: quad {q.value:.5f} vs IS {est:.5f}")
        return ok, "; ".join(parts)
    return _timed(9, name, 600, run)


IDENTITY_CHECKS = (check_exact_counts, check_exponential_formula, check_spectrum_counts,
                   check_importance_identity, check_falling_moments, check_r3_triviality,
                   check_asymptotic_formula)
LIMIT_CHECKS = (check_poisson_limit, check_smallest_component, check_clt, check_largest_component)


def check_cache(tables: list[CountTable]) -> CheckResult:
    """Recompute every cached H value; any difference fails."""
    def run(m):
        bad = []
        for t in tables:
            if t.kind != "H":
                continue
            for n, v in sorted(t.values.items()):
                if transfer_count_H(n, t.r) != v:
                    bad.append((t.r, n))
        m["corrupted"] = bad
        return not bad, "cache matches recomputation" if not bad else f"corrupted entries (r, n): {bad[:5]}"
    return _timed(0, "count-cache integrity", 600, run)


def run_suite(suite: str, budget: int | None = None, cache: list[CountTable] | None = None) -> list[CheckResult]:
    if suite == "identities":
        results = [chk() for chk in IDENTITY_CHECKS]
        if cache is not None:
            results.insert(0, check_cache(cache))
        return results
    if suite == "limits":
        return [chk(budget) for chk in LIMIT_CHECKS]
    if suite == "all":
        return run_suite("identities", budget, cache) + run_suite("limits", budget)
    raise ValueError(f"unknown suite {suite!r}")

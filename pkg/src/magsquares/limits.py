"""Limit laws for the component spectrum of uniform magical squares.

For r = 2 the counts chi_i converge jointly to independent Poissons with
rate 1 for i = 1 and 1/(2i) for i >= 2.  For r >= 3 every fixed-size count
vanishes, which is represented here as a point mass at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "AsymptoticH",
    "QuadratureError",
    "QuadratureResult",
    "clt_reference",
    "components_law_r2",
    "exp_integral",
    "H_asymptotic",
    "largest_moment_limit",
    "poisson_limit_pmf",
    "poisson_rate",
    "smallest_limit_pmf",
    "smallest_limit_tail",
]


def poisson_rate(i: int, r: int = 2) -> float:
    if i < 1:
        raise ValueError("component size must be >= 1")
    if r >= 3:
        return 0.0
    if r != 2:
        raise ValueError("limit laws are defined for r >= 2")
    return 1.0 if i == 1 else 1.0 / (2 * i)


def poisson_limit_pmf(i: int, k: int, r: int = 2) -> float:
    """P(Z_i = k) for the limiting count of i-components."""
    lam = poisson_rate(i, r)
    if k < 0:
        return 0.0
    if lam == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-lam + k * math.log(lam) - math.lgamma(k + 1))


def _harmonic(m: int) -> float:
    if m <= 256:
        return math.fsum(1.0 / k for k in range(1, m + 1))
    return float(special.digamma(m + 1.0)) + _EULER_GAMMA_H


_EULER_GAMMA_H = -float(special.digamma(1.0))


def smallest_limit_tail(size: int) -> float:
    """P(S_inf > size) = exp(-1/2 - H_size / 2); equals 1 at size 0."""
    if size < 0:
        raise ValueError("size must be >= 0")
    if size == 0:
        return 1.0
    return math.exp(-0.5 - _harmonic(size) / 2)


def smallest_limit_pmf(size: int) -> float:
    """P(S_inf = size) for the smallest-component limit at r = 2."""
    if size < 1:
        raise ValueError("size must be >= 1")
    if size == 1:
        return -math.expm1(-1.0)
    return math.exp(-0.5 - _harmonic(size - 1) / 2) * -math.expm1(-1.0 / (2 * size))


def clt_reference(n: int, c: float) -> tuple[float, float]:
    """Normalized component count (c - log(n)/2) / sqrt(log(n)/2) and its N(0,1) cdf."""
    if n < 2:
        raise ValueError("n must be >= 2")
    mu = 0.5 * math.log(n)
    z = (c - mu) / math.sqrt(mu)
    return z, float(special.ndtr(z))


def components_law_r2(n: int, cmax: int = 120) -> np.ndarray:
    """Finite-n law of C_n on M(n, 2): entry c is P(C_n = c), c < cmax (float).

    From sum_n beta_n E t^{C_n} x^n = e^{tx/2} (1 - x)^{-t/2}:
    P(C_n = c) = beta_n^{-1} sum_a (1/2)^a / a! * q_{n-a}(c - a) 2^{-(c - a)},
    where q_k(j) is the probability that a uniform permutation of [k] has j
    cycles, i.e. the law of a sum of independent Bernoulli(1/i), i <= k.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    q = np.zeros(cmax)
    q[0] = 1.0
    keep = {0: q.copy()}
    for i in range(1, n + 1):
        q = np.concatenate(([0.0], q[:-1])) / i + q * (1.0 - 1.0 / i)
        if i >= n - cmax:
            keep[i] = q.copy()
    b_prev, b = 1.0, 1.0
    for k in range(1, n):
        b_prev, b = b, b - b_prev / (2 * (k + 1))
    out = np.zeros(cmax)
    for c in range(cmax):
        acc = 0.0
        for a in range(0, min(c, n) + 1):
            acc += 0.5 ** a / math.factorial(a) * keep[n - a][c - a] * 2.0 ** (a - c)
        out[c] = acc
    return out / b


# --------------------------------------------------------------- E1 integral

_EULER_GAMMA = -special.digamma(1.0)


def _e1_series(y: float) -> float:
    # E1(y) = -gamma - log y - sum_{k>=1} (-y)^k / (k k!)
    terms = []
    term = 1.0
    for k in range(1, 200):
        term *= -y / k
        terms.append(term / k)
        if abs(term) < 1e-18:
            break
    return -_EULER_GAMMA - math.log(y) - math.fsum(terms)


def _e1_continued_fraction(y: float) -> float:
    # modified Lentz on E1(y) = e^-y / (y + 1 - 1^2/(y + 3 - 2^2/(y + 5 - ...)))
    tiny = 1e-300
    b = y + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h * math.exp(-y)
    raise ArithmeticError(f"E1 continued fraction did not converge at y={y}")


def exp_integral(y: float) -> float:
    """E1(y) = int_y^inf e^-z / z dz for y > 0."""
    if not y > 0:
        raise ValueError(f"E1 needs y > 0, got {y}")
    return _e1_series(y) if y <= 1.0 else _e1_continued_fraction(y)


# ---------------------------------------------------- largest component law

class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_bound: float
    evaluations: int


def _kernel(u: float) -> float:
    return math.exp(-0.5 * exp_integral(u) - u)


def _moment_integral(m: int, splice: float, tol: float) -> tuple[float, float, int]:
    """I_m = int_0^inf exp(-E1(u)/2 - u) u^(m-1) du with its error bound."""
    # below the splice, u = t^2 turns the u^(m - 1/2) behaviour at 0 smooth
    def head(t):
        if t == 0.0:
            return 0.0
        u = t * t
        return _kernel(u) * u ** (m - 1) * 2.0 * t

    # truncate where the tail int_U^inf u^(m-1) e^-u du = Gamma(m, U) is negligible
    def upper_gamma(a, x):
        return exp_integral(x) if a == 0 else float(special.gammaincc(a, x) * special.gamma(a))

    upper = max(splice, 40.0)
    while upper_gamma(m, upper) > 1e-17:
        upper *= 1.25
    tail_bound = upper_gamma(m, upper)

    v1, e1, info1 = integrate.quad(head, 0.0, math.sqrt(splice), epsabs=tol / 10,
                                   epsrel=1e-13, limit=200, full_output=True)[:3]
    v2, e2, info2 = integrate.quad(lambda u: _kernel(u) * u ** (m - 1), splice, upper,
                                   epsabs=tol / 10, epsrel=1e-13, limit=400,
                                   full_output=True)[:3]
    return v1 + v2, float(e1 + e2 + tail_bound), info1["neval"] + info2["neval"]


def largest_moment_limit(m: int, splice: float = 1.0, tol: float = 1e-8) -> QuadratureResult:
    """m-th moment of the limit law of L_n / n at r = 2.

    The moment is sqrt(pi) / (2 Gamma(m + 1/2)) * I_m with I_m the integral
    above; the same normalization at m = 0 gives total mass exactly 1.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if splice <= 0:
        raise ValueError("splice point must be positive")
    integral, err, evals = _moment_integral(m, splice, tol)
    pref = math.sqrt(math.pi) / (2.0 * math.gamma(m + 0.5))
    value, bound = pref * integral, pref * err
    if bound > tol:
        raise QuadratureError(f"moment {m}: achieved error bound {bound:.3g} > tolerance {tol:.3g}")
    return QuadratureResult(value, bound, evals)


# ------------------------------------------------------------ H asymptotics

@dataclass(frozen=True)
class AsymptoticH:
    """Natural logs of the two equivalent leading-order forms of H(n, r)."""

    log_factorial_form: float
    log_stirling_form: float


def H_asymptotic(n: int, r: int) -> AsymptoticH:
    """log of (nr)!/(r!)^{2n} e^{(r-1)^2/2} and of its Stirling replacement."""
    if n < 1 or r < 2:
        raise ValueError("need n >= 1 and r >= 2")
    c = (r - 1) ** 2 / 2
    lrf = math.lgamma(r + 1)
    fact = math.lgamma(n * r + 1) - 2 * n * lrf + c
    stir = (0.5 * math.log(2 * math.pi) + (n * r + 0.5) * (math.log(r) + math.log(n))
            - n * r + c - 2 * n * lrf)
    return AsymptoticH(fact, stir)

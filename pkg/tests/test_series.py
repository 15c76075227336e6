import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from magsquares.enumeration import count_table, enumerate_matrices, spectrum_of
from magsquares.permutation import ComponentSpectrum
from magsquares.series import (
    CountTable,
    InfeasibleMoment,
    RationalSeries,
    beta_r2,
    f_r2,
    f_table_from_H,
    h_r2,
    h_r2_closed_form,
    integer_partitions,
    joint_falling_moment,
    mixture_pmf_r2,
    series_exp,
    series_log,
    spectra,
    spectrum_count,
)

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=50)


def _h2_tables(max_n):
    H = CountTable(2, {k: h_r2(k) for k in range(max_n + 1)})
    f = CountTable(2, {k: f_r2(k) for k in range(1, max_n + 1)}, kind="f")
    return H, f


def test_exp_examples():
    assert series_exp(RationalSeries.zero(3)).coeffs == (1, 0, 0, 0)
    x = RationalSeries((0, 1, 0, 0, 0))
    assert series_exp(x).coeffs == (1, 1, Fraction(1, 2), Fraction(1, 6), Fraction(1, 24))
    assert series_log(RationalSeries((1, 0, 0))).coeffs == (0, 0, 0)


def test_exp_log_need_right_constant_term():
    with pytest.raises(ValueError):
        series_exp(RationalSeries((1, 1)))
    with pytest.raises(ValueError):
        series_log(RationalSeries((2, 1)))


@given(st.lists(fractions, min_size=1, max_size=8))
def test_exp_log_roundtrip(tail):
    s = RationalSeries((Fraction(0), *tail))
    assert series_log(series_exp(s)) == s


@given(st.lists(fractions, min_size=1, max_size=6), st.lists(fractions, min_size=1, max_size=6))
def test_exp_is_multiplicative(a, b):
    k = min(len(a), len(b))
    sa, sb = RationalSeries((0, *a[:k])), RationalSeries((0, *b[:k]))
    assert series_exp(sa + sb) == series_exp(sa) * series_exp(sb)


def test_log_of_r2_series_gives_closed_form_f():
    H = CountTable(2, {k: h_r2(k) for k in range(6)})
    f = f_table_from_H(H, 5)
    assert [f[k] for k in range(1, 6)] == [1, 1, 6, 72, 1440]
    assert all(f_r2(k) == f[k] for k in range(1, 6))


def test_log_of_r3_series_matches_connected_enumeration():
    f = f_table_from_H(count_table(3, 6))
    assert [f[k] for k in range(1, 7)] == [1, 2, 31, 1272, 105720, 15438600]
    for n in range(1, 5):
        connected = sum(1 for A in enumerate_matrices(n, 3) if spectrum_of(A).total == 1)
        assert connected == f[n]


def test_h_r2_examples():
    assert [h_r2_closed_form(n) for n in range(7)] == [1, 1, 3, 21, 282, 6210, 202410]
    assert h_r2(3) == 21


def test_h_r2_recurrence_agrees_with_series():
    for n in (0, 1, 2, 17, 40, 64, 65, 100):
        assert h_r2(n) == h_r2_closed_form(n)
    assert beta_r2(3) == Fraction(21, 36)


def test_spectrum_count_examples():
    H, f = _h2_tables(5)
    assert spectrum_count(2, (2, 0), f) == 2
    assert spectrum_count(2, (0, 1), f) == 1
    assert sum(spectrum_count(2, s, f) for s in spectra(5)) == h_r2_closed_form(5)


def test_spectrum_count_rejects_wrong_r():
    _, f = _h2_tables(3)
    with pytest.raises(ValueError):
        spectrum_count(3, (3, 0, 0), f)


def test_partitions():
    assert sum(1 for _ in integer_partitions(10)) == 42
    for p in integer_partitions(7):
        assert sum(k * c for k, c in p.items()) == 7


def test_falling_moment_examples():
    H, f = _h2_tables(200)
    assert joint_falling_moment(3, 2, [1], H, f) == Fraction(9, 7)
    assert joint_falling_moment(3, 2, [0, 0], H, f) == 1
    e2 = [joint_falling_moment(n, 2, [0, 1], H, f) for n in (50, 100, 200)]
    gaps = [abs(x - Fraction(1, 4)) for x in e2]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < Fraction(1, 100)


def test_falling_moment_infeasible():
    H, f = _h2_tables(3)
    with pytest.raises(InfeasibleMoment):
        joint_falling_moment(3, 2, [0, 2], H, f)
    assert joint_falling_moment(3, 2, [0, 2], H, f, allow_infeasible=True) == 0


def test_mixture_pmf():
    with mpmath.workdps(60):
        total = mpmath.fsum(mixture_pmf_r2(Fraction(1, 2), n) for n in range(201))
        assert abs(total - 1) < mpmath.mpf(10) ** -20
        p0 = mixture_pmf_r2(Fraction(1, 2), 0)
        assert abs(p0 - mpmath.sqrt(mpmath.mpf(1) / 2) * mpmath.exp(-mpmath.mpf(1) / 4)) < 1e-50
    assert abs(float(p0) - 0.5506) < 1e-4
    with pytest.raises(ValueError):
        mixture_pmf_r2(1, 3)


def test_count_table_json_roundtrip():
    t = count_table(3, 8)
    back = CountTable.from_json(t.to_json())
    assert back == t
    assert '"20933840"' in t.to_json()


@settings(max_examples=25)
@given(st.integers(1, 12))
def test_beta_recurrence(n):
    # beta_{k+1} = beta_k - beta_{k-1} / (2 (k + 1))
    k = n
    assert beta_r2(k + 1) == beta_r2(k) - beta_r2(k - 1) / (2 * (k + 1))


def test_r2_f_closed_form_n_ge_2():
    H = CountTable(2, {k: h_r2(k) for k in range(31)})
    f = f_table_from_H(H)
    assert all(f[k] == math.factorial(k) * math.factorial(k - 1) // 2 for k in range(2, 31))

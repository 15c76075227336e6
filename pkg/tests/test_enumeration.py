from collections import Counter
from fractions import Fraction
from itertools import product
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from magsquares.enumeration import (
    MagicalSquare,
    ResourceCapExceeded,
    UnionFind,
    count_table,
    enumerate_matrices,
    exact_statistic_pmf,
    spectrum_histogram,
    spectrum_of,
    transfer_count_H,
)
from magsquares.permutation import ComponentSpectrum, Permutation
from magsquares.series import CountTable, f_r2, h_r2_closed_form, spectrum_count


def brute_count(n, r):
    # every n x n matrix with entries 0..r, filtered by line sums
    return sum(
        1 for cells in product(range(r + 1), repeat=n * n)
        if all(sum(cells[i * n:(i + 1) * n]) == r for i in range(n))
        and all(sum(cells[j::n]) == r for j in range(n)))


@pytest.mark.parametrize("n, r", [(1, 2), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)])
def test_transfer_matches_brute_force(n, r):
    assert transfer_count_H(n, r) == brute_count(n, r)


def test_known_values():
    assert [transfer_count_H(n, 2) for n in range(7)] == [1, 1, 3, 21, 282, 6210, 202410]
    assert [transfer_count_H(n, 3) for n in range(7)] == [1, 1, 4, 55, 2008, 153040, 20933840]
    assert transfer_count_H(5, 1) == 120 and transfer_count_H(4, 0) == 1


def test_transfer_matches_closed_form_r2():
    assert all(transfer_count_H(n, 2) == h_r2_closed_form(n) for n in range(26))


def test_state_cap():
    with pytest.raises(ResourceCapExceeded):
        transfer_count_H(30, 4, state_cap=10)


def test_enumerate_examples():
    assert [A.to_dense() for A in enumerate_matrices(1, 2)] == [[[2]]]
    assert sum(1 for _ in enumerate_matrices(3, 2)) == 21
    m23 = [A.to_dense() for A in enumerate_matrices(2, 3)]
    assert m23 == [[[a, 3 - a], [3 - a, a]] for a in range(4)]


def test_enumerate_is_lexicographic_and_distinct():
    mats = [A.to_dense() for A in enumerate_matrices(3, 3)]
    flat = [sum(m, []) for m in mats]
    assert flat == sorted(flat) and len(set(map(tuple, flat))) == 55


def test_enumerate_cap():
    with pytest.raises(ResourceCapExceeded):
        enumerate_matrices(6, 3, cap=1000)


def test_square_validation():
    with pytest.raises(ValueError):
        MagicalSquare.from_dense([[2, 0], [1, 1]], 2)
    A = MagicalSquare.from_dense([[1, 1], [1, 1]])
    assert A[1, 2] == 1 and A.r == 2


def test_spectrum_examples():
    assert spectrum_of(MagicalSquare.from_dense([[3 if i == j else 0 for j in range(4)] for i in range(4)])).counts == (4, 0, 0, 0)
    assert spectrum_of(MagicalSquare.from_dense([[1, 1], [1, 1]])).counts == (0, 1)


def test_spectrum_histogram_matches_formula():
    f = CountTable(2, {k: f_r2(k) for k in range(1, 6)}, kind="f")
    for n in range(1, 6):
        hist = spectrum_histogram(n, 2)
        assert sum(hist.values()) == h_r2_closed_form(n)
        for spec, cnt in hist.items():
            assert spectrum_count(2, spec, f) == cnt


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.data())
def test_union_find_matches_cycle_structure(n, data):
    # for a permutation matrix plus another, components are the cycles of red o blue^-1
    blue = Permutation(tuple(data.draw(st.permutations(list(range(1, n + 1))))))
    red = Permutation(tuple(data.draw(st.permutations(list(range(1, n + 1))))))
    entries = Counter()
    for i in range(1, n + 1):
        entries[(i, blue(i))] += 1
        entries[(i, red(i))] += 1
    A = MagicalSquare(n, 2, tuple(entries.items()))
    sigma = Permutation(tuple(red(blue.inverse()(j)) for j in range(1, n + 1)))
    assert spectrum_of(A) == ComponentSpectrum.from_sizes(n, (len(c) for c in sigma.cycles()))


def test_union_find():
    uf = UnionFind(5)
    uf.union(0, 1)
    uf.union(3, 4)
    uf.union(1, 0)
    assert uf.find(0) == uf.find(1) != uf.find(3)
    assert len({uf.find(i) for i in range(5)}) == 3


def test_exact_pmf():
    pmf = exact_statistic_pmf(3, 2, "chi_1")
    assert pmf.as_dict() == {0: Fraction(6, 21), 1: Fraction(9, 21), 3: Fraction(6, 21)}
    assert pmf.mean() == Fraction(9, 7)
    assert exact_statistic_pmf(2, 2, "C")[2] == Fraction(2, 3)
    with pytest.raises(ValueError):
        exact_statistic_pmf(2, 2, "bogus")


def test_count_table():
    t = count_table(3, 5)
    assert t.values == {0: 1, 1: 1, 2: 4, 3: 55, 4: 2008, 5: 153040}

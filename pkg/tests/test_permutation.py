from collections import Counter
from itertools import permutations
from math import factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from magsquares.permutation import (
    ComponentSpectrum,
    Permutation,
    compose_with_inverse,
    cycle_type,
    make_rng,
    sample_uniform_permutation,
)

perms = st.integers(1, 9).flatmap(
    lambda n: st.permutations(list(range(1, n + 1))).map(lambda p: Permutation(tuple(p))))


def test_n1_is_identity():
    assert sample_uniform_permutation(1, 0) == Permutation.identity(1)


def test_n2_identity_half():
    rng = make_rng(11)
    hits = sum(sample_uniform_permutation(2, rng) == Permutation.identity(2) for _ in range(100_000))
    assert abs(hits / 100_000 - 0.5) <= 0.01


def test_derangements_n6():
    # brute-force oracle: 265 of the 720 permutations of [6] have no fixed point
    exact = sum(all(p[i] != i for i in range(6)) for p in permutations(range(6)))
    assert exact == 265
    rng = make_rng(12)
    draws = 100_000
    hits = sum(cycle_type(sample_uniform_permutation(6, rng))[1] == 0 for _ in range(draws))
    assert abs(hits / draws - 265 / 720) <= 0.01


def test_uniform_over_s4_chisquare():
    rng = make_rng(13)
    counts = Counter(sample_uniform_permutation(4, rng).images for _ in range(48_000))
    assert len(counts) == 24
    assert stats.chisquare(list(counts.values())).pvalue > 0.01


def test_sampler_rejects_bad_n():
    with pytest.raises(ValueError):
        sample_uniform_permutation(0, 1)


@pytest.mark.parametrize("p, expected", [
    (Permutation.identity(4), (4, 0, 0, 0)),
    (Permutation.from_cycles(4, [(1, 2)]), (2, 1, 0, 0)),
    (Permutation.from_cycles(7, [(1, 2, 3, 4, 5, 6, 7)]), (0, 0, 0, 0, 0, 0, 1)),
])
def test_cycle_type_examples(p, expected):
    assert cycle_type(p).counts == expected


def test_compose_examples():
    red, blue = Permutation((2, 3, 1)), Permutation((3, 1, 2))
    assert blue.inverse() == Permutation((2, 3, 1))
    assert compose_with_inverse(red, blue) == Permutation((3, 1, 2))
    assert compose_with_inverse(red, red) == Permutation.identity(3)
    assert compose_with_inverse(red, Permutation.identity(3)) == red


def test_compose_uniform_over_all_pairs():
    # red o blue^-1 is uniform on S_3 when (red, blue) runs over all 36 pairs
    s3 = [Permutation(p) for p in permutations((1, 2, 3))]
    hist = Counter(compose_with_inverse(a, b) for a in s3 for b in s3)
    assert set(hist.values()) == {6}


def test_compose_size_mismatch():
    with pytest.raises(ValueError):
        compose_with_inverse(Permutation.identity(2), Permutation.identity(3))


@given(perms)
def test_cycle_type_sums_to_n(p):
    ct = cycle_type(p)
    assert sum(k * c for k, c in enumerate(ct.counts, start=1)) == p.n


@given(perms)
def test_inverse_and_cycles_roundtrip(p):
    assert compose_with_inverse(p, p) == Permutation.identity(p.n)
    assert Permutation.from_cycles(p.n, p.cycles()) == p
    assert cycle_type(p.inverse()) == cycle_type(p)
    assert Permutation.from_array(p.to_array()) == p


@given(perms, st.data())
def test_conjugation_keeps_cycle_type(p, data):
    q = Permutation(tuple(data.draw(st.permutations(list(range(1, p.n + 1))))))
    conj = Permutation(tuple(q(p(q.inverse()(j))) for j in range(1, p.n + 1)))
    assert cycle_type(conj) == cycle_type(p)


def test_cycle_type_law_matches_cauchy_formula():
    # P(type c) = prod 1 / (k^c_k c_k!) for a uniform permutation
    n = 5
    exact = Counter(cycle_type(Permutation(p)) for p in permutations(range(1, n + 1)))
    for spec, cnt in exact.items():
        w = 1
        for k, c in spec.parts:
            w *= k ** c * factorial(c)
        assert cnt * w == factorial(n)


def test_spectrum_validation_and_accessors():
    s = ComponentSpectrum.from_counts((1, 0, 1, 0))
    assert s.n == 4 and s.total == 2 and s.fixed == 1 and s.nontrivial == 1
    assert s.smallest == 1 and s.largest == 3 and s[2] == 0
    assert ComponentSpectrum.from_sizes(4, [3, 1]) == s
    assert ComponentSpectrum.from_mapping(4, {1: 1, 3: 1}) == s
    with pytest.raises(ValueError):
        ComponentSpectrum.from_counts((1, 1, 1))


def test_make_rng_is_reproducible():
    a = make_rng(5).permutation(20)
    b = make_rng(np.random.SeedSequence(5)).permutation(20)
    assert np.array_equal(a, b)

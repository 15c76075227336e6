import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from magsquares.enumeration import enumerate_matrices, exact_statistic_pmf, spectrum_of
from magsquares.permutation import ComponentSpectrum, Permutation, make_rng
from magsquares.sampler import (
    ColoredGraph,
    EstimateReport,
    draw_cycle_lengths,
    expected_ess_fraction,
    importance_estimate,
    parse_statistic,
    project,
    rejection_sample_spectrum,
    rejection_sample_uniform,
    sample_colored,
    weight,
    weighted_ks,
    weighted_pmf,
)
from magsquares.series import beta_r2, h_r2


def test_colored_n1():
    g = sample_colored(1, 0)
    assert g.blue == g.red == Permutation.identity(1)


def test_colored_pairs_uniform_n3():
    rng = make_rng(21)
    counts = Counter()
    for _ in range(100_000):
        g = sample_colored(3, rng)
        counts[(g.blue.images, g.red.images)] += 1
    assert len(counts) == 36
    assert stats.chisquare(list(counts.values())).pvalue > 0.01


def test_project_examples():
    p = Permutation((2, 3, 1))
    A, spec = project(ColoredGraph(p, p))
    assert A.to_dense() == [[0, 2, 0], [0, 0, 2], [2, 0, 0]]
    assert spec.counts == (3, 0, 0)
    A, spec = project(ColoredGraph(Permutation.identity(3), p))
    assert spec.counts == (0, 0, 1)
    assert spectrum_of(A) == spec


def test_weight_examples():
    assert weight(ComponentSpectrum.from_counts((4, 0, 0, 0))) == 1
    assert weight(ComponentSpectrum.from_counts((0, 0, 1))) == Fraction(1, 2)


def test_weights_sum_to_square_count():
    # every square appears 2^(C - chi_1) times among the (n!)^2 colored graphs
    from itertools import permutations
    for n in (2, 3, 4):
        total = Fraction(0)
        perms = [Permutation(p) for p in permutations(range(1, n + 1))]
        for b in perms:
            for r in perms:
                total += weight(project(ColoredGraph(b, r))[1])
        assert total == h_r2(n)


def test_constant_statistic_n6():
    rep = importance_estimate("one", 6, 100_000, rng=31, H_value=h_r2(6))
    assert abs(rep.estimate - 1) <= 3 / math.sqrt(rep.ess)
    assert rep.self_normalized == 1.0


def test_chi1_n3():
    rep = importance_estimate("chi_1", 3, 1_000_000, rng=7, H_value=21)
    assert abs(rep.estimate - 9 / 7) <= 0.005
    assert abs(rep.self_normalized - 9 / 7) <= 0.005


def test_both_engines_agree_with_exact_law():
    exact = float(exact_statistic_pmf(5, 2, "C").mean())
    for engine in ("pairs", "cycles"):
        rep = importance_estimate("components", 5, 200_000, rng=32, engine=engine)
        assert abs(rep.self_normalized - exact) <= 0.01, engine


def test_cycles_engine_has_permutation_law():
    lengths, offsets = draw_cycle_lengths(6, 50_000, 33, engine="cycles")
    counts = np.diff(offsets)
    ones = np.add.reduceat((lengths == 1).astype(int), offsets[:-1])
    assert abs(np.mean(ones == 0) - 265 / 720) <= 0.01
    assert abs(counts.mean() - sum(1 / k for k in range(1, 7))) <= 0.02


def test_unknown_engine_and_statistic():
    with pytest.raises(ValueError):
        draw_cycle_lengths(4, 2, 0, engine="nope")
    with pytest.raises(ValueError):
        parse_statistic("nope")


def test_statistic_batch_forms_match_scalar_forms():
    lengths, offsets = draw_cycle_lengths(30, 200, 34)
    names = ["one", "components", "smallest", "largest", "chi_1", "chi_3",
             "largest_frac_moment_2", "components_normalized", "smallest=1", "C=4"]
    for name in names:
        st = parse_statistic(name)
        batch = st.of_batch(lengths, offsets, 30)
        for b in range(200):
            spec = ComponentSpectrum.from_sizes(30, lengths[offsets[b]:offsets[b + 1]])
            assert batch[b] == pytest.approx(st(spec)), name


def test_raw_unavailable_without_H():
    rep = importance_estimate("chi_1", 10, 1000, rng=1)
    assert rep.estimate is None
    d = rep.to_dict()
    assert d["raw_available"] is False and d["estimate"] is None and d["seed"] == 1


def test_merge_is_exact_and_associative():
    v = np.array([1.0, 2.0, 0.0, 5.0, 3.0])
    w = np.array([0.5, 0.25, 1.0, 0.125, 0.5])
    whole = EstimateReport("x", 4)
    whole.add_batch(v, w)
    parts = []
    for sl in (slice(0, 2), slice(2, 3), slice(3, 5)):
        r = EstimateReport("x", 4)
        r.add_batch(v[sl], w[sl])
        parts.append(r)
    left = parts[0].merge(parts[1]).merge(parts[2])
    right = parts[0].merge(parts[1].merge(parts[2]))
    for rep in (left, right):
        assert (rep.sample_count, rep.raw_weighted_sum, rep.weight_sum, rep.weight_sq_sum) == (
            whole.sample_count, whole.raw_weighted_sum, whole.weight_sum, whole.weight_sq_sum)
    with pytest.raises(ValueError):
        parts[0].merge(EstimateReport("y", 4))


def test_self_normalized_is_scale_invariant():
    v = np.array([1.0, 2.0, 4.0])
    w = np.array([0.5, 0.25, 0.125])
    a, b = EstimateReport("x", 3), EstimateReport("x", 3)
    a.add_batch(v, w)
    b.add_batch(v, w * 8)
    assert a.self_normalized == b.self_normalized and a.ess == b.ess


def test_seeded_runs_repeat():
    a = importance_estimate("largest", 50, 5000, rng=99)
    b = importance_estimate("largest", 50, 5000, rng=99)
    assert a.to_dict() == b.to_dict()


def test_ess_fraction_matches_exact_limit():
    # ESS / N converges to E[w]^2 / E[w^2], which decays like n^(-1/4)
    assert expected_ess_fraction(2) == pytest.approx(0.9)
    for n, N in ((10, 100_000), (1000, 100_000)):
        rep = importance_estimate("one", n, N, rng=40 + n)
        assert rep.ess / N == pytest.approx(expected_ess_fraction(n), rel=0.05)
    assert expected_ess_fraction(100_000) < 0.1


def test_rejection_n1():
    A, trials = rejection_sample_uniform(1, 0)
    assert A.to_dense() == [[2]] and trials == 1


def test_rejection_uniform_n2():
    rng = make_rng(41)
    counts = Counter(tuple(map(tuple, rejection_sample_uniform(2, rng)[0].to_dense()))
                     for _ in range(30_000))
    expected = {tuple(map(tuple, A.to_dense())) for A in enumerate_matrices(2, 2)}
    assert set(counts) == expected
    assert stats.chisquare(list(counts.values())).pvalue > 0.01


def test_rejection_uniform_n3_matches_enumeration():
    rng = make_rng(42)
    counts = Counter(tuple(map(tuple, rejection_sample_uniform(3, rng)[0].to_dense()))
                     for _ in range(42_000))
    assert len(counts) == 21
    assert stats.chisquare(list(counts.values())).pvalue > 0.01


def test_rejection_mean_trials_n100():
    rng = make_rng(43)
    trials = [rejection_sample_spectrum(100, rng)[1] for _ in range(10_000)]
    target = 1 / float(beta_r2(100))
    assert abs(target - math.sqrt(100 * math.pi / math.e)) < 0.1
    assert abs(np.mean(trials) - target) <= 0.5


def test_weighted_helpers():
    v = np.array([1.0, 1.0, 2.0])
    w = np.array([1.0, 1.0, 2.0])
    assert weighted_pmf(v, w) == {1.0: 0.5, 2.0: 0.5}
    # point mass at 0 vs a cdf that is 1/2 at 0
    assert weighted_ks(np.array([0.0]), np.array([1.0]), lambda x: np.full_like(x, 0.5)) == 0.5


def test_ess_fraction_at_large_n_is_recorded():
    # well under 0.3 at n = 1e5: ESS / N decays like n^(-1/4)
    rep = importance_estimate("one", 100_000, 400_000, rng=44, engine="cycles")
    ratio = rep.ess / rep.sample_count
    assert ratio == pytest.approx(expected_ess_fraction(100_000), rel=0.1)
    assert ratio < 0.3

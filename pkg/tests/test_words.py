import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from binspeed.chain import ITERATIVE, cp_bounds, speed
from binspeed.config import ALTERNATIVE, CANONICAL, BinConfig, Tail, flat
from binspeed.distribution import Geometric, delta, truncated_geometric, uniform
from binspeed.words import (SeriesMode, Word, candidate_mass, class_size, coeff_table,
                            count_words, displacement, enumerate_words, epsilon,
                            has_renovation, height, length, series_speed, tail_bound)

from conftest import configs

EXPECTED_COEFFS = (1, -1, 1, -3, 7, -15, 29, -54, 102)


def all_words(max_len, max_letter):
    for l in range(1, max_len + 1):
        yield from itertools.product(range(1, max_letter + 1), repeat=l)


class TestBasics:
    def test_word_type(self):
        w = Word([3, 1, 2])
        assert w.length == length(w) == 3 and w.height == height(w) == 3
        assert w.drop_first() == (1, 2) and w.drop_last() == (3, 1)
        with pytest.raises(ValueError):
            Word([0])

    def test_displacement_examples(self):
        assert displacement(CANONICAL, ()) == 0
        assert displacement(flat(4), (1, 1, 1)) == 3
        assert displacement(CANONICAL, (2,)) == 0

    @given(configs())
    def test_epsilon_single_and_double_one(self, X):
        assert epsilon(X, (1,)) == 1
        assert epsilon(X, (1, 1)) == 0

    def test_epsilon_empty(self):
        with pytest.raises(ValueError):
            epsilon(CANONICAL, ())

    def test_renovation_examples(self):
        assert has_renovation((3, 1, 2)) == 2
        assert has_renovation((2, 2, 2)) is None

    @given(st.lists(st.integers(1, 6), min_size=1, max_size=8))
    def test_short_words_renovate(self, alpha):
        if len(alpha) > height(alpha) + 1:
            assert has_renovation(alpha) is not None

    def test_class_size_counts_compositions(self):
        en = enumerate_words(CANONICAL, 8, 9, 8, supported_only=False)
        for h in range(9):
            for l in range(1, 9):
                assert class_size(h, l) == en.words[h, l] == math.comb(h + l - 1, l - 1)

    @pytest.mark.parametrize("h", range(5))
    def test_class_size_brute_force(self, h):
        for l in range(1, 6):
            brute = sum(1 for w in itertools.product(range(1, h + 2), repeat=l)
                        if sum(w) - l == h)
            assert class_size(h, l) == brute

    def test_count_words(self):
        assert count_words(6, 5, 24) == sum(5**l for l in range(1, 7))
        en = enumerate_words(CANONICAL, 6, 5, supported_only=False)
        assert int(en.words.sum()) == 19530


class TestEnumerator:
    @pytest.mark.parametrize("X", [CANONICAL, ALTERNATIVE,
                                   BinConfig((3, 1, 2), -2, Tail.FLAT)])
    def test_matches_reference_replay(self, X):
        en = enumerate_words(X, 4, 4, supported_only=False, record=True)
        assert set(en.records) == set(all_words(4, 4))
        for w, (e, d) in en.records.items():
            assert e == epsilon(X, w, "membership") == epsilon(X, w, "displacement")
            assert d == displacement(X, w)

    @given(configs(), st.lists(st.integers(1, 5), min_size=1, max_size=6))
    def test_reference_routes_agree(self, X, alpha):
        assert epsilon(X, alpha, "membership") == epsilon(X, alpha, "displacement")

    def test_supported_only_drops_zero_classes(self):
        full = enumerate_words(CANONICAL, 5, 4, supported_only=False, record=True)
        part = enumerate_words(CANONICAL, 5, 4, supported_only=True, record=True)
        for w, (e, _) in full.records.items():
            if len(w) <= height(w) + 1:
                assert part.records[w][0] == e
            else:
                assert w not in part.records and e == 0

    def test_pruned_enumeration_matches_unpruned(self):
        mu = [0.0, 0.5, 0.5]
        a = enumerate_words(CANONICAL, 12, 2, 11, mu=mu)
        b = enumerate_words(CANONICAL, 12, 2, 11, mu=mu, supported_only=False)
        assert np.array_equal(a.eps_sum, b.eps_sum)


class TestCoefficients:
    def test_canonical(self):
        assert coeff_table(8).values == EXPECTED_COEFFS

    def test_alternative(self):
        assert coeff_table(8, ALTERNATIVE, "alternative").values == EXPECTED_COEFFS

    def test_prefix(self):
        assert coeff_table(4).values == EXPECTED_COEFFS[:5]

    def test_other_configuration(self):
        X = BinConfig((2, 1, 3), 0, Tail.FLAT)
        assert coeff_table(6, X).values == EXPECTED_COEFFS[:7]

    def test_conjecture_diagnostic(self):
        t = coeff_table(8)
        assert t.conjecture_holds()
        assert any(d["nonzero"] for d in t.diagnostics())

    def test_workers(self):
        assert coeff_table(5, workers=2).values == EXPECTED_COEFFS[:6]

    def test_kmax_range(self):
        with pytest.raises(ValueError):
            coeff_table(11)

    def test_evaluate_near_one(self):
        t = coeff_table(8)
        lo, hi = cp_bounds(9, 0.95, ITERATIVE)
        assert abs(t.evaluate(0.05) - lo) < 0.05**9 * 200


class TestSeries:
    @pytest.mark.parametrize("h", [0, 3, 8])
    def test_delta_one(self, h):
        assert series_speed(delta(1), h_max=h).value == pytest.approx(1, abs=1e-15)

    def test_near_one_inside_bracket(self):
        r = series_speed(Geometric(0.8), h_max=8)
        lo, hi = cp_bounds(9, Fraction(4, 5))
        assert float(lo) - r.tail_bound <= r.value <= float(hi) + r.tail_bound
        assert not r.formal

    def test_regrouping_by_powers(self):
        r = series_speed(Geometric(0.9), h_max=8)
        poly = sum(a * 0.1**k for k, a in enumerate(EXPECTED_COEFFS))
        assert abs(r.value - poly) <= r.tail_bound

    def test_partial_sums_converge_for_bounded_law(self):
        exact = float(speed(uniform(2)))
        r = series_speed(uniform(2), h_max=24)
        assert abs(r.value - exact) <= r.tail_bound
        assert r.tail_bound < 1e-6

    def test_conditioned_truncation(self):
        d = truncated_geometric(Fraction(1, 2), 3, "lower")
        with pytest.raises(ValueError):
            series_speed(d)
        r = series_speed(d.conditioned(), h_max=14)
        exact = float(speed(d.conditioned()))
        assert abs(r.value - exact) <= r.tail_bound

    def test_cesaro_delta_two(self):
        r = series_speed(delta(2), mode=SeriesMode.CESARO, n_terms=40)
        assert r.formal
        assert r.partial_sums[:4] == [0.0, 1.0, 0.0, 1.0]
        assert abs(r.value - 0.5) <= 1 / 80

    def test_formal_flag_small_p(self, caplog):
        r = series_speed(Geometric(0.4), h_max=4)
        assert r.formal

    def test_tail_bound_brute_force(self):
        p = 0.7
        g = Geometric(p)
        m = candidate_mass(g, 5)
        for h in range(6):
            brute = sum(math.prod(float(g.weight(a)) for a in w)
                        for l in range(1, h + 2)
                        for w in itertools.product(range(1, h + 2), repeat=l)
                        if sum(w) - l == h and has_renovation(w) is None)
            assert m[h] == pytest.approx(brute, rel=1e-12)

    def test_tail_bound_covers_true_remainder(self):
        g = Geometric(0.85)
        exact_lo, exact_hi = cp_bounds(10, 0.85, ITERATIVE)
        for h in (2, 4, 6):
            r = series_speed(g, h_max=h)
            assert exact_lo - r.tail_bound <= r.value <= exact_hi + r.tail_bound
            assert r.tail_bound == tail_bound(g, h)

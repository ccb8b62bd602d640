import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from binspeed import rng
from binspeed.brw import small_p_lower_bound
from binspeed.chain import cp_bounds, speed
from binspeed.config import ALTERNATIVE, BinConfig, Tail
from binspeed.distribution import Geometric, delta, truncated_geometric, uniform
from binspeed.montecarlo import (MAX_VERTICES, coupled_ibm_estimate, longest_path_dag,
                                 parse_grid, pooled, sample_longest_paths, simulate_ibm,
                                 simulate_replicas, sweep_cp)


def brute_longest_mean(n, p):
    """Exact E[L_n] by enumerating every edge subset."""
    edges = list(itertools.combinations(range(n), 2))
    total = Fraction(0)
    for keep in itertools.product((0, 1), repeat=len(edges)):
        level = [0] * n
        for (i, j), k in zip(edges, keep):
            if k:
                level[j] = max(level[j], level[i] + 1)
        w = Fraction(1)
        for k in keep:
            w *= p if k else 1 - p
        total += w * max(level)
    return total


class TestRng:
    def test_streams_differ(self):
        assert rng.stream_key(0, 0) != rng.stream_key(0, 1)
        assert rng.stream_key(0, 0) != rng.stream_key(1, 0)

    def test_uniform_range_and_mean(self):
        key = rng.stream_key(3)
        u = np.array([rng.uniform_open(key, np.uint64(i)) for i in range(20000)])
        assert u.min() > 0 and u.max() <= 1
        assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / 20000)

    def test_geometric_endpoints_and_mean(self):
        key = rng.stream_key(4)
        assert rng.geometric(key, np.uint64(0), rng.log1m(1.0)) == 1
        assert rng.geometric(key, np.uint64(0), rng.log1m(0.0)) >= 2**62
        x = np.array([rng.geometric(key, np.uint64(i), rng.log1m(0.3))
                      for i in range(20000)])
        sd = math.sqrt(0.7) / 0.3 / math.sqrt(20000)
        assert abs(x.mean() - 1 / 0.3) < 4 * sd


class TestIbm:
    def test_delta_one(self):
        assert simulate_ibm(delta(1), 10_000).mean == 1.0

    def test_delta_two(self):
        est = simulate_ibm(delta(2), 10**6)
        assert est.mean == 0.5

    def test_mass_at_infinity(self):
        d = truncated_geometric(Fraction(1, 2), 1, "lower")
        est = simulate_ibm(d, 10**5, seed=2)
        assert abs(est.mean - 0.5) < 4 * est.std_error + 1e-3

    def test_geometric_inside_bracket(self):
        est = simulate_ibm(Geometric(0.5), 10**7, seed=1)
        lo, hi = cp_bounds(9, Fraction(1, 2))
        assert float(lo) - 3 * est.std_error <= est.mean <= float(hi) + 3 * est.std_error

    @pytest.mark.parametrize("p", [0.7, 0.9])
    def test_geometric_converges_to_bracket(self, p):
        est = simulate_ibm(Geometric(p), 2 * 10**6, seed=5)
        lo, hi = cp_bounds(9, p)
        assert lo - 4 * est.std_error <= est.mean <= hi + 4 * est.std_error

    def test_infinite_tail_start(self):
        est = simulate_ibm(uniform(3), 10**6, X0=ALTERNATIVE, seed=3)
        exact = float(speed(uniform(3)))
        assert abs(est.mean - exact) <= 4 * est.std_error + 1e-5

    def test_initial_configuration_does_not_matter(self):
        X0 = BinConfig((5, 1, 1, 2), -3, Tail.FLAT)
        a = simulate_ibm(uniform(3), 10**6, seed=9)
        b = simulate_ibm(uniform(3), 10**6, X0=X0, seed=9)
        assert abs(a.mean - b.mean) < 20 / 10**6

    def test_deterministic(self):
        a = simulate_ibm(uniform(4), 10**5, seed=11)
        b = simulate_ibm(uniform(4), 10**5, seed=11)
        assert a == b and a.batch_means == b.batch_means

    def test_replicas_across_threads(self):
        a = simulate_replicas(uniform(3), 20_000, 5, seed=2, threads=1)
        b = simulate_replicas(uniform(3), 20_000, 5, seed=2, threads=3)
        assert a == b
        assert len({e.mean for e in a}) > 1
        mean, se = pooled(a)
        assert se > 0

    def test_rejects_zero_steps(self):
        with pytest.raises(ValueError):
            simulate_ibm(delta(1), 0)


class TestGraphs:
    @pytest.mark.parametrize("n", [1, 5, 40])
    def test_endpoints(self, n):
        assert longest_path_dag(n, 1.0).longest == n - 1
        assert longest_path_dag(n, 0.0).longest == 0
        assert coupled_ibm_estimate(n, 1.0).longest == n - 1
        assert coupled_ibm_estimate(n, 0.0).longest == 0

    def test_single_vertex(self):
        assert coupled_ibm_estimate(1, 0.4, seed=3).longest == 0

    def test_brute_force_oracle(self):
        assert brute_longest_mean(3, Fraction(1, 2)) == Fraction(9, 8)

    @pytest.mark.parametrize("method", ["dag", "coupled"])
    def test_mean_matches_oracle(self, method):
        for n, p in [(3, Fraction(1, 2)), (4, Fraction(3, 10))]:
            x = sample_longest_paths(n, float(p), 100_000, seed=7, method=method)
            exact = float(brute_longest_mean(n, p))
            assert abs(x.mean() - exact) <= 3 * x.std() / math.sqrt(len(x))

    def test_large_graph_near_bracket(self):
        n = 1000
        x = sample_longest_paths(n, 0.5, 1000, seed=4, method="coupled")
        lo, hi = cp_bounds(9, Fraction(1, 2))
        assert float(lo) - 0.01 <= x.mean() / n <= float(hi) + 0.01

    def test_deterministic_across_threads(self):
        a = sample_longest_paths(30, 0.2, 101, seed=5, threads=1)
        b = sample_longest_paths(30, 0.2, 101, seed=5, threads=4)
        assert np.array_equal(a, b)

    def test_memory_guard(self):
        with pytest.raises(ValueError):
            longest_path_dag(MAX_VERTICES + 1, 0.5)

    @pytest.mark.parametrize("args", [(0, 0.5), (5, 1.5), (5, -0.1)])
    def test_bad_args(self, args):
        with pytest.raises(ValueError):
            coupled_ibm_estimate(*args)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            sample_longest_paths(3, 0.5, 4, method="bfs")


class TestSweep:
    def test_parse_grid(self):
        g = parse_grid("0.02:0.02:0.98")
        assert len(g) == 49 and g[0] == 0.02 and g[-1] == 0.98
        assert parse_grid("0.1,0.5") == [0.1, 0.5]
        with pytest.raises(ValueError):
            parse_grid("0.1:0:0.5")

    def test_rejects_endpoints(self):
        with pytest.raises(ValueError):
            sweep_cp([0.0, 0.5], 100)

    def test_dominates_small_p_lower_curve(self):
        pts = sweep_cp([0.05, 0.1, 0.2], 200_000, seed=3)
        for pt in pts:
            est = pt.estimate
            assert est.mean + 3 * est.std_error >= small_p_lower_bound(pt.p)

    def test_deterministic_across_threads(self):
        a = sweep_cp([0.3, 0.6], 10_000, seed=1, threads=1)
        b = sweep_cp([0.3, 0.6], 10_000, seed=1, threads=2)
        assert a == b

"""Quick invariant checks across all modules, runnable without pytest."""

from __future__ import annotations

import math
import random
import time
from fractions import Fraction
from typing import Callable

from . import brw, chain, config, montecarlo, words
from .config import ALTERNATIVE, CANONICAL, BinConfig, Tail
from .distribution import Distribution, delta, truncated_geometric, uniform

CHECKS: list[tuple[str, Callable[[], bool]]] = []


def check(fn):
    CHECKS.append((fn.__name__, fn))
    return fn


def random_config(r: random.Random, max_bins: int = 6) -> BinConfig:
    counts = tuple(r.randint(1, 4) for _ in range(r.randint(0, max_bins)))
    tail = Tail.FLAT if r.random() < 0.7 else Tail.INFINITE
    return BinConfig(counts, r.randint(-3, 3), tail)


@check
def config_monotone_moves() -> bool:
    r = random.Random(1)
    for _ in range(300):
        X = random_config(r)
        Y = config.apply_word(X, [r.randint(1, 3) for _ in range(r.randint(0, 4))])
        if not config.dominates(X, Y):
            continue
        a, b = sorted(r.randint(1, 8) for _ in range(2))
        if not config.dominates(config.apply_move(X, b), config.apply_move(Y, a)):
            return False
        if not config.dominates(config.apply_move(X, a), config.shift(X)):
            return False
    return True


@check
def config_lipschitz() -> bool:
    r = random.Random(2)
    for _ in range(200):
        X = random_config(r)
        a, b = sorted(r.randint(1, 50) for _ in range(2))
        d = config.ball_pos(X, a) - config.ball_pos(X, b)
        if not 0 <= d <= b - a:
            return False
    return True


@check
def chain_small_cases() -> bool:
    ok = chain.speed(delta(1)) == 1 and chain.speed(delta(2)) == Fraction(1, 2)
    ok &= chain.speed(uniform(2)) == Fraction(2, 3)
    ok &= all(chain.build_chain(uniform(K)).n_states == 2 ** (K - 1) for K in range(1, 9))
    return bool(ok)


@check
def chain_closed_forms_k3() -> bool:
    p = Fraction(1, 2)
    lo, hi = chain.cp_bounds(3, p)
    L3 = (p * (p**2 - 3 * p + 3) ** 2 * (p**4 - 6 * p**3 + 14 * p**2 - 16 * p + 8)
          / (3 * p**6 - 26 * p**5 + 96 * p**4 - 196 * p**3 + 235 * p**2 - 158 * p + 47))
    U3 = (p**3 - 2 * p**2 + p - 1) / (p**5 - 4 * p**4 + 8 * p**3 - 9 * p**2 + 6 * p - 3)
    return lo == L3 and hi == U3


@check
def chain_freeze_identity() -> bool:
    r = random.Random(3)
    for _ in range(5):
        K = r.randint(1, 6)
        w = [r.randint(0, 4) for _ in range(K)]
        w[-1] = max(w[-1], 1)
        tot = sum(w)
        dist = Distribution({k + 1: Fraction(x, tot) for k, x in enumerate(w)})
        c = chain.build_chain(dist)
        pi = chain.stationary(c, chain.EXACT)
        if chain.freeze_rate(c, pi) != chain.front_advance_rate(c, pi):
            return False
    return True


@check
def exact_solvers_agree() -> bool:
    dist = truncated_geometric(Fraction(2, 5), 5, "upper")
    c = chain.build_chain(dist)
    a = chain.stationary(c, chain.EXACT, solver="bareiss")
    b = chain.stationary(c, chain.EXACT, solver="modular")
    return list(a.probabilities) == list(b.probabilities)


@check
def words_epsilon_routes() -> bool:
    en = words.enumerate_words(CANONICAL, 4, 4, supported_only=False, record=True)
    for w, (e, d) in en.records.items():
        if e != words.epsilon(CANONICAL, w, "displacement"):
            return False
        if words.has_renovation(w) and e != 0:
            return False
    return True


@check
def words_coefficients() -> bool:
    want = (1, -1, 1, -3, 7, -15, 29)
    return (words.coeff_table(6).values == want
            and words.coeff_table(6, ALTERNATIVE).values == want)


@check
def montecarlo_deterministic() -> bool:
    e = montecarlo.simulate_ibm(delta(2), 10_000)
    a = montecarlo.simulate_ibm(uniform(3), 5_000, seed=7)
    b = montecarlo.simulate_ibm(uniform(3), 5_000, seed=7)
    return e.mean == 0.5 and a == b


@check
def montecarlo_graph_mean() -> bool:
    n = 20_000
    for method in ("dag", "coupled"):
        x = montecarlo.sample_longest_paths(3, 0.5, n, seed=11, method=method)
        if abs(x.mean() - 9 / 8) > 4 * x.std() / math.sqrt(n):
            return False
    return True


@check
def brw_binary_params() -> bool:
    p = brw.brw_params()
    return (abs(p.phi_star - 1) < 1e-10 and abs(p.v - math.e) < 1e-10
            and abs(p.tau2 - math.e) < 1e-10)


@check
def brw_uniform_increasing() -> bool:
    kw = [k * float(brw.uniform_ibm_speed(k)) for k in range(1, 9)]
    return all(a < b for a, b in zip(kw, kw[1:])) and kw[-1] < math.e


def run(out=print) -> bool:
    ok = True
    for name, fn in CHECKS:
        t = time.perf_counter()
        try:
            passed = bool(fn())
        except Exception as exc:  # report and keep going
            passed = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'} {name} [{time.perf_counter() - t:.2f}s]")
    return ok

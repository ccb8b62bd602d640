"""Monte Carlo estimates of front speeds and longest paths in random DAGs.

Every kernel draws from the counter-based stream of its replica, so results
are bit-identical for a given ``(seed, stream)`` no matter how replicas are
spread over threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numba
import numpy as np

from . import rng
from .config import CANONICAL, BinConfig, Tail
from .distribution import Distribution, Geometric

N_BATCHES = 16
MAX_VERTICES = 10**6
BIG = 1 << 40

Law = Union[Distribution, Geometric]


@dataclass(frozen=True)
class SpeedEstimate:
    """Front displacement per step with a batch-means standard error."""

    mean: float
    std_error: float
    steps: int
    seed: int
    label: str
    stream: int = 0
    batch_means: tuple = field(default=(), repr=False, compare=False)


@dataclass(frozen=True)
class GraphSample:
    n: int
    p: float
    longest: int
    seed: int
    stream: int = 0


# --- move laws --------------------------------------------------------------

def _law_tables(dist: Law):
    """``(kind, cdf, log1mp)`` describing how the kernels sample moves."""
    if isinstance(dist, Geometric):
        return 1, np.zeros(1), rng.log1m(float(dist.p))
    cdf = np.cumsum([float(w) for w in dist.vector()])
    return 0, cdf, 0.0


@numba.njit(cache=True, nogil=True)
def _sample_move(kind, cdf, log1mp, key, ctr):
    """Move type, or 0 for a move at infinity."""
    if kind == 1:
        return rng.geometric(key, ctr, log1mp)
    u = rng.uniform_open(key, ctr)
    for k in range(cdf.shape[0]):
        if u <= cdf[k]:
            return k + 1
    return 0


# --- infinite-bin model -----------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _grow(counts, front, left, right, fill):
    """Reallocate with ``left`` more tail bins and ``right`` more empty bins."""
    n = counts.shape[0]
    out = np.zeros(n + left + right, dtype=np.int64)
    out[:left] = fill
    out[left:left + n] = counts
    return out, front + left


@numba.njit(cache=True, nogil=True)
def _run_ibm(counts, front, fill, kind, cdf, log1mp, key, steps, bounds):
    """Apply ``steps`` random moves; returns the front at each batch boundary."""
    fronts = np.zeros(bounds.shape[0], dtype=np.int64)
    f0 = front
    shift = 0  # bins prepended so far, to report fronts in original units
    nb = 0
    if bounds[0] == 0:
        fronts[0] = 0
        nb = 1
    for step in range(steps):
        xi = _sample_move(kind, cdf, log1mp, key, np.uint64(step))
        if xi > 0:
            total = 0
            j = front
            while True:
                if j < 0:
                    grow = max(counts.shape[0], xi)
                    counts, front = _grow(counts, front, grow, 0, fill)
                    j += grow
                    shift += grow
                total += counts[j]
                if total >= xi:
                    break
                j -= 1
            b = j + 1
            if b >= counts.shape[0] - 1:
                counts, front = _grow(counts, front, 0, counts.shape[0], fill)
            counts[b] += 1
            if b > front:
                front = b
        while nb < bounds.shape[0] and bounds[nb] == step + 1:
            fronts[nb] = front - shift - f0
            nb += 1
    return fronts


def _initial_window(X0: BinConfig, margin: int = 64):
    fill = BIG if X0.tail is Tail.INFINITE else 1
    lo = min(X0.offset, X0.front) - margin
    hi = X0.front + margin
    counts = np.array([X0.count(j) if j >= X0.offset else fill
                       for j in range(lo, hi + 1)], dtype=np.int64)
    return counts, X0.front - lo, fill


def simulate_ibm(dist: Law, steps: int, X0: BinConfig = CANONICAL, seed: int = 0,
                 stream: int = 0, n_batches: int = N_BATCHES) -> SpeedEstimate:
    """Front speed estimate ``(front(X_steps) - front(X0)) / steps``."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    kind, cdf, log1mp = _law_tables(dist)
    counts, front, fill = _initial_window(X0)
    nb = min(n_batches, steps)
    bounds = np.array([(i * steps) // nb for i in range(nb + 1)], dtype=np.int64)
    fronts = _run_ibm(counts, front, fill, kind, cdf, log1mp,
                      rng.stream_key(seed, stream), steps, bounds)
    mean = fronts[-1] / steps
    lengths = np.diff(bounds)
    batch = np.diff(fronts) / lengths
    se = float(np.std(batch, ddof=1) / math.sqrt(nb)) if nb > 1 else 0.0
    label = getattr(dist, "label", "") or repr(dist)
    return SpeedEstimate(float(mean), se, steps, seed, label, stream, tuple(batch.tolist()))


def simulate_replicas(dist: Law, steps: int, replicas: int, seed: int = 0,
                      X0: BinConfig = CANONICAL, threads: int = 1) -> list[SpeedEstimate]:
    """Independent replicas on streams ``0 .. replicas-1``, in stream order."""
    def one(r):
        return simulate_ibm(dist, steps, X0, seed, r)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(replicas)))
    return [one(r) for r in range(replicas)]


def pooled(estimates: Sequence[SpeedEstimate]) -> tuple[float, float]:
    """Mean of replica means and its standard error."""
    m = np.array([e.mean for e in estimates])
    if len(m) < 2:
        return float(m.mean()), estimates[0].std_error
    return float(m.mean()), float(m.std(ddof=1) / math.sqrt(len(m)))


# --- longest paths ----------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _dag_longest(n, log1mp, key):
    """Longest path by dynamic programming; in-edges found by geometric skips."""
    level = np.zeros(n, dtype=np.int64)
    ctr = np.uint64(0)
    best_all = 0
    for j in range(1, n):
        best = 0
        i = j
        while True:
            i -= rng.geometric(key, ctr, log1mp)
            ctr += np.uint64(1)
            if i < 0:
                break
            if level[i] + 1 > best:
                best = level[i] + 1
        level[j] = best
        if best > best_all:
            best_all = best
    return best_all


@numba.njit(cache=True, nogil=True)
def _coupled_longest(n, log1mp, key):
    """Longest path read off the infinite-bin model driven by geometric moves.

    Bins of negative index hold infinitely many balls and are not stored; a
    move type beyond the number of tracked balls puts the ball into bin 0.
    """
    counts = np.zeros(n + 1, dtype=np.int64)
    counts[0] = 1
    front = 0
    for v in range(1, n):
        xi = rng.geometric(key, np.uint64(v - 1), log1mp)
        b = 0
        if xi <= v:
            total = 0
            j = front
            while True:
                total += counts[j]
                if total >= xi:
                    b = j + 1
                    break
                j -= 1
        counts[b] += 1
        if b > front:
            front = b
    return front


@numba.njit(cache=True, nogil=True)
def _many(method, n, log1mp, keys, out):
    for r in range(keys.shape[0]):
        if method == 0:
            out[r] = _dag_longest(n, log1mp, keys[r])
        else:
            out[r] = _coupled_longest(n, log1mp, keys[r])


def _check_graph_args(n: int, p: float):
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_VERTICES:
        raise ValueError(f"n={n} exceeds the memory guard {MAX_VERTICES}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")


def longest_path_dag(n: int, p: float, seed: int = 0, stream: int = 0) -> GraphSample:
    """Sample a random DAG on ``n`` ordered vertices and return its longest path."""
    _check_graph_args(n, p)
    L = _dag_longest(n, rng.log1m(p), rng.stream_key(seed, stream))
    return GraphSample(n, p, int(L), seed, stream)


def coupled_ibm_estimate(n: int, p: float, seed: int = 0, stream: int = 0) -> GraphSample:
    """Longest-path length of a random DAG through its infinite-bin encoding."""
    _check_graph_args(n, p)
    L = _coupled_longest(n, rng.log1m(p), rng.stream_key(seed, stream))
    return GraphSample(n, p, int(L), seed, stream)


def sample_longest_paths(n: int, p: float, replicas: int, seed: int = 0,
                         method: str = "dag", threads: int = 1) -> np.ndarray:
    """Longest paths of ``replicas`` graphs; replica ``r`` uses stream ``r``."""
    _check_graph_args(n, p)
    if method not in ("dag", "coupled"):
        raise ValueError(f"unknown method {method!r}")
    keys = np.array([rng.stream_key(seed, r) for r in range(replicas)], dtype=np.uint64)
    out = np.zeros(replicas, dtype=np.int64)
    code = 0 if method == "dag" else 1
    log1mp = rng.log1m(p)
    if threads > 1 and replicas > 1:
        chunks = np.array_split(np.arange(replicas), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for idx, res in zip(chunks, pool.map(
                    lambda c: _chunk(code, n, log1mp, keys[c]), chunks)):
                out[idx] = res
    else:
        _many(code, n, log1mp, keys, out)
    return out


def _chunk(code, n, log1mp, keys):
    out = np.zeros(keys.shape[0], dtype=np.int64)
    _many(code, n, log1mp, keys, out)
    return out


# --- growth-rate sweep ------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    p: float
    estimate: SpeedEstimate


def parse_grid(text: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    if ":" in text:
        start, step, stop = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


def sweep_cp(p_grid: Sequence[float], steps: int, seed: int = 0,
             threads: int = 1) -> list[SweepPoint]:
    """Growth-rate estimates over a grid, grid point ``i`` on stream ``i``."""
    for p in p_grid:
        if not 0.0 < p < 1.0:
            raise ValueError(f"grid values must lie in (0, 1), got {p}")

    def one(item):
        i, p = item
        return SweepPoint(p, simulate_ibm(Geometric(float(p)), steps, CANONICAL, seed, i))
    items = list(enumerate(p_grid))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, items))
    return [one(it) for it in items]


def sweep_rows(points: Sequence[SweepPoint]):
    """CSV rows ``p,steps,estimate,std_error,seed``."""
    return [(f"{pt.p:.12g}", pt.estimate.steps, repr(float(pt.estimate.mean)),
             repr(float(pt.estimate.std_error)), pt.estimate.seed) for pt in points]

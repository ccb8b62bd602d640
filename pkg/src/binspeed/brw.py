"""Branching random walks with selection and the uniform infinite-bin model.

With offspring ``{x, x+1}`` at rate 1, keeping the rightmost ``N`` particles
gives a process whose maximum moves like the front of the infinite-bin model
with uniform moves on ``{1..N}`` run at ``N`` moves per unit time, so its
speed is ``N * w_N``.  As ``N`` grows this approaches the branching speed
``v`` with a deficit of order ``(log N)**-2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np
from scipy.optimize import bisect

from . import chain, rng
from .distribution import uniform
from .montecarlo import N_BATCHES, SpeedEstimate, simulate_ibm

BRACKET = (1e-6, 50.0)
ROOT_TOL = 1e-12
BURN_IN = 0.1

EXACT = chain.EXACT
ITERATIVE = chain.ITERATIVE
SIMULATE = "simulate"


class BracketError(ValueError):
    """The speed equation has no root in the search bracket."""


@dataclass(frozen=True)
class BrwSpec:
    """Branching at ``rate``; offspring at ``x + d`` with mean multiplicity ``m``.

    ``atoms`` lists ``(d, m)`` pairs.  Simulation treats each atom as exactly
    ``m`` children, so ``m`` must be a positive integer there.
    """

    rate: float = 1.0
    atoms: tuple = ((0.0, 1.0), (1.0, 1.0))

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if not self.atoms or sum(m for _, m in self.atoms) < 1:
            raise ValueError("offspring process must have at least one child")
        if any(m < 0 for _, m in self.atoms):
            raise ValueError("multiplicities must be non-negative")

    def log_laplace(self, theta: float) -> float:
        """``Lambda(theta) = E(sum exp(theta * d)) - 1``."""
        return sum(m * math.exp(theta * d) for d, m in self.atoms) - 1.0

    def d_log_laplace(self, theta: float, order: int = 1) -> float:
        return sum(m * d**order * math.exp(theta * d) for d, m in self.atoms)

    def children(self) -> np.ndarray:
        out = []
        for d, m in self.atoms:
            if m != int(m):
                raise ValueError("simulation needs integer multiplicities")
            out.extend([float(d)] * int(m))
        return np.array(out)


BINARY = BrwSpec()


@dataclass(frozen=True)
class BrwParams:
    v: float
    phi_star: float
    tau2: float
    residual: float = 0.0


def brw_params(spec: BrwSpec = BINARY) -> BrwParams:
    """Speed ``v``, minimiser ``phi*`` and variance ``tau2`` of the branching walk.

    ``phi*`` solves ``phi * Lambda'(phi) = Lambda(phi)`` and is found by
    bisection on :data:`BRACKET`.
    """
    def g(phi):
        return phi * spec.d_log_laplace(phi) - spec.log_laplace(phi)
    lo, hi = BRACKET
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        phi = lo
    elif ghi == 0:
        phi = hi
    elif (glo > 0) == (ghi > 0):
        raise BracketError(
            f"phi*Lambda'(phi) - Lambda(phi) keeps the sign of {glo:+.3g} on {BRACKET}")
    else:
        phi = bisect(g, lo, hi, xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps, maxiter=200)
    v = spec.rate * spec.log_laplace(phi) / phi
    tau2 = spec.rate * spec.d_log_laplace(phi, 2)
    return BrwParams(v, phi, tau2, abs(g(phi)))


def predicted_speed_gap(params: BrwParams, N: int) -> float:
    """Asymptotic speed of the N-particle process, ``v - pi^2 phi* tau2 / (2 log(N)^2)``."""
    if N < 2:
        raise ValueError("N must be >= 2")
    return params.v - math.pi**2 * params.phi_star * params.tau2 / (2 * math.log(N) ** 2)


def small_p_prediction(p: float) -> float:
    """Two-term expansion ``e p - p pi^2 e / (2 log(p)^2)`` of the growth rate."""
    return math.e * p - p * math.pi**2 * math.e / (2 * math.log(p) ** 2)


# --- uniform infinite-bin model --------------------------------------------

def uniform_ibm_speed(k: int, mode: Optional[str] = None, steps: int = 10**7,
                      seed: int = 0):
    """Speed ``w_k`` of the model with moves uniform on ``{1..k}``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode is None:
        mode = EXACT if k <= chain.EXACT_MAX_K else ITERATIVE
    if mode == SIMULATE:
        return simulate_ibm(uniform(k), steps, seed=seed).mean
    return chain.speed(uniform(k), mode)


def uniform_table(ks: Sequence[int], mode: Optional[str] = None):
    """Rows ``(k, k * w_k, mode)``."""
    rows = []
    for k in ks:
        m = mode or (EXACT if k <= chain.EXACT_MAX_K else ITERATIVE)
        rows.append((k, k * uniform_ibm_speed(k, m), m))
    return rows


def fit_log_correction(ks: Sequence[int], kw: Sequence[float]) -> float:
    """Least-squares ``c`` in ``e - k w_k = c (log k)^-2`` (no intercept)."""
    x = np.array([math.log(k) ** -2 for k in ks])
    y = math.e - np.asarray(kw, dtype=float)
    return float(x @ y / (x @ x))


def small_p_lower_bound(p: float, k: Optional[int] = None) -> float:
    """``k p (1-p)^k w_k``, a lower bound on the growth rate for every ``k``.

    ``k`` defaults to ``ceil(1/p)`` capped at the largest chain solved here.
    """
    if k is None:
        k = min(math.ceil(1 / p), 20)
    w = float(uniform_ibm_speed(k))
    return k * p * (1 - p) ** k * w


# --- N-particle simulation --------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _nbrw(N, rate, children, horizon, key, bounds):
    """Event-driven run; returns max and min positions at the ``bounds`` times."""
    nc = children.shape[0]
    cap = N + nc
    pos = np.zeros(cap)
    tag = np.zeros(cap)
    n = N
    ctr = np.uint64(0)
    for i in range(n):
        tag[i] = rng.uniform_open(key, ctr)
        ctr += np.uint64(1)
    nb = bounds.shape[0]
    mx = np.zeros(nb)
    mn = np.zeros(nb)
    t = 0.0
    b = 0
    while b < nb:
        t += rng.exponential(key, ctr) / (rate * n)
        ctr += np.uint64(1)
        while b < nb and bounds[b] <= t:
            mx[b] = pos[:n].max()
            mn[b] = pos[:n].min()
            b += 1
        if b >= nb:
            break
        i = int(rng.uniform_open(key, ctr) * n)
        ctr += np.uint64(1)
        if i >= n:
            i = n - 1
        x = pos[i]
        pos[i] = x + children[0]
        tag[i] = rng.uniform_open(key, ctr)
        ctr += np.uint64(1)
        for c in range(1, nc):
            pos[n] = x + children[c]
            tag[n] = rng.uniform_open(key, ctr)
            ctr += np.uint64(1)
            n += 1
        while n > N:
            # drop the leftmost particle; equal positions are ranked by tag
            j = 0
            for q in range(1, n):
                if pos[q] < pos[j] or (pos[q] == pos[j] and tag[q] < tag[j]):
                    j = q
            n -= 1
            pos[j] = pos[n]
            tag[j] = tag[n]
    return mx, mn


@dataclass(frozen=True)
class NbrwEstimate:
    speed: SpeedEstimate
    min_speed: float
    N: int
    horizon: float
    burn_in: float


def simulate_nbrw(spec: BrwSpec, N: int, horizon: float, seed: int = 0,
                  stream: int = 0, n_batches: int = N_BATCHES) -> NbrwEstimate:
    """Speed of the rightmost particle after discarding the first 10% of time."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    t0 = BURN_IN * horizon
    bounds = t0 + (horizon - t0) * np.arange(n_batches + 1) / n_batches
    mx, mn = _nbrw(N, spec.rate, spec.children(), horizon, rng.stream_key(seed, stream),
                   bounds)
    span = horizon - t0
    mean = (mx[-1] - mx[0]) / span
    batch = np.diff(mx) / (span / n_batches)
    se = float(np.std(batch, ddof=1) / math.sqrt(n_batches))
    est = SpeedEstimate(float(mean), se, int(round(horizon)), seed, f"nbrw:N={N}", stream,
                        tuple(batch.tolist()))
    return NbrwEstimate(est, float((mn[-1] - mn[0]) / span), N, horizon, t0)


@numba.njit(cache=True, nogil=True)
def _insert_desc(a, n, x):
    """Insert ``x`` into the descending array ``a[:n]``."""
    j = n
    while j > 0 and a[j - 1] < x:
        a[j] = a[j - 1]
        j -= 1
    a[j] = x
    return n + 1


@numba.njit(cache=True, nogil=True)
def _paired(N, M, horizon, key, check_every):
    """Two binary-branching populations sharing their clocks by rank.

    Each event picks a rank ``r`` uniformly among ``M``; the ``r``-th
    rightmost particle of each population branches if it exists.  Returns
    the number of checks and the number of times the smaller population
    had more particles above some level than the larger one.
    """
    X = np.zeros(N + 1, dtype=np.int64)
    Y = np.zeros(M + 1, dtype=np.int64)
    nx = 1
    ny = 1
    t = 0.0
    ctr = np.uint64(0)
    events = 0
    checks = 0
    bad = 0
    while True:
        t += rng.exponential(key, ctr) / M
        ctr += np.uint64(1)
        if t > horizon:
            break
        r = int(rng.uniform_open(key, ctr) * M)
        ctr += np.uint64(1)
        if r >= M:
            r = M - 1
        if r < nx:
            nx = _insert_desc(X, nx, X[r] + 1)
            if nx > N:
                nx = N
        if r < ny:
            ny = _insert_desc(Y, ny, Y[r] + 1)
            if ny > M:
                ny = M
        events += 1
        if events % check_every == 0:
            checks += 1
            # counting functions: the i-th largest of X never exceeds that of Y
            if nx > ny:
                bad += 1
            else:
                for i in range(nx):
                    if X[i] > Y[i]:
                        bad += 1
                        break
    return checks, bad


def paired_selection_check(N: int, M: int, horizon: float, seed: int = 0,
                           check_every: int = 1) -> tuple[int, int]:
    """Run coupled populations with caps ``N <= M``; returns ``(checks, violations)``."""
    if not 1 <= N <= M:
        raise ValueError("need 1 <= N <= M")
    return _paired(N, M, horizon, rng.stream_key(seed, 0), check_every)

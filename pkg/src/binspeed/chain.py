"""Exact speed of infinite-bin models with finitely supported move laws.

For a law supported on ``{1..K}`` (plus possibly infinity) only the ``K-1``
bins starting at ``B(X, K)`` can still receive balls.  Their contents form a
Markov chain on the compositions of ``0..K-1``, which has ``2**(K-1)``
states.  The front speed is a linear functional of its stationary law.

State encoding: a composition ``(c1, ..., cm)`` is the integer whose binary
expansion is ``1 0^(c1-1) 1 0^(c2-1) ...``; the empty composition is 0.  The
states holding ``s`` balls then occupy the index range ``[2**(s-1), 2**s)``,
so levels are contiguous and increase with the index.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .config import BinConfig, ball_pos
from .distribution import Distribution, as_fraction, truncated_geometric
from .exact import left_null_vector, modular_left_null_vector

log = logging.getLogger(__name__)

EXACT = "exact"
ITERATIVE = "iterative"

EXACT_MAX_K = 10
ITERATIVE_MAX_K = 22
RESIDUAL_TOL = 1e-13
BAREISS_MAX_STATES = 32
MAX_ITERATIONS = 10**6


class ReducibleChainError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    pass


# --- state encoding -------------------------------------------------------

def encode(counts: Sequence[int]) -> int:
    idx = 0
    for c in counts:
        if c == 0:
            break
        idx = ((idx << 1) | 1) << (c - 1)
    return idx


def decode(idx: int, K: int) -> tuple[int, ...]:
    """Window vector of length ``K-1`` for state ``idx``."""
    parts = []
    bits = bin(idx)[2:] if idx else ""
    for ch in bits:
        if ch == "1":
            parts.append(1)
        else:
            parts[-1] += 1
    return tuple(parts) + (0,) * (K - 1 - len(parts))


def n_states(K: int) -> int:
    return 1 << (K - 1)


def top_start(K: int) -> int:
    """First index of the full level ``|Y| = K-1``."""
    return 0 if K == 1 else 1 << (K - 2)


@numba.njit(cache=True)
def _decode_into(idx, Y):
    Y[:] = 0
    if idx == 0:
        return 0
    nbits = 0
    t = idx
    while t:
        nbits += 1
        t >>= 1
    m = -1
    for b in range(nbits - 1, -1, -1):
        if (idx >> b) & 1:
            m += 1
            Y[m] = 1
        else:
            Y[m] += 1
    return nbits


@numba.njit(cache=True)
def _encode_from(Y):
    idx = 0
    for c in Y:
        if c == 0:
            break
        idx = ((idx << 1) | 1) << (c - 1)
    return idx


@numba.njit(cache=True)
def _build_tables(K):
    n = 1 << (K - 1)
    W = K - 1
    nxt = np.zeros((n, K), dtype=np.int32)
    front = np.zeros(n, dtype=np.int32)
    Y = np.zeros(max(W, 1), dtype=np.int64)
    Z = np.zeros(max(W, 1), dtype=np.int64)
    for idx in range(n):
        s = _decode_into(idx, Y)
        last = K
        for j in range(W - 1, -1, -1):
            if Y[j] > 0:
                last = Y[j]
                break
        front[idx] = last
        for xi in range(1, K + 1):
            # position (1-based) receiving the ball; W+1 means a fresh bin
            if s < xi:
                b = 1
            else:
                acc = 0
                b = W + 1
                for k in range(W, 0, -1):
                    acc += Y[k - 1]
                    if acc >= xi:
                        b = k + 1
                        break
            Z[:] = 0
            if s < K - 1:
                for j in range(W):
                    Z[j] = Y[j]
                Z[b - 1] += 1
            else:
                # leftmost bin freezes, window slides one bin right
                for j in range(W - 1):
                    Z[j] = Y[j + 1]
                if b >= 2:
                    Z[b - 2] += 1
            nxt[idx, xi - 1] = _encode_from(Z[:W]) if W > 0 else 0
    return nxt, front


@numba.njit(cache=True)
def _sweep(nxt, w, x, out, top0):
    """One pass of the chain embedded at the full level.

    Mass ``x`` on the full level is pushed through one step, then carried up
    through the lower levels until it returns to the full level.
    """
    n, K = nxt.shape
    out[:] = 0.0
    for i in range(top0, n):
        m = x[i]
        if m != 0.0:
            for j in range(K):
                if w[j] != 0.0:
                    out[nxt[i, j]] += m * w[j]
    for i in range(top0):
        m = out[i]
        if m != 0.0:
            for j in range(K):
                if w[j] != 0.0:
                    out[nxt[i, j]] += m * w[j]


@numba.njit(cache=True)
def _apply(nxt, w, pi, out):
    n, K = nxt.shape
    out[:] = 0.0
    for i in range(n):
        m = pi[i]
        if m != 0.0:
            for j in range(K):
                out[nxt[i, j]] += m * w[j]


# --- model ----------------------------------------------------------------

@dataclass(frozen=True)
class ChainModel:
    """Reduced near-front chain for a finitely supported law.

    The chain is built for the law conditioned on a finite move; a mass at
    infinity only rescales time and is applied to the speed afterwards.
    """

    K: int
    dist: Distribution
    nxt: np.ndarray = field(repr=False)
    front_count: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return self.nxt.shape[0]

    @property
    def law(self) -> Distribution:
        return self.dist.conditioned()

    @property
    def states(self) -> list[tuple[int, ...]]:
        return [decode(i, self.K) for i in range(self.n_states)]

    def index(self, counts: Sequence[int]) -> int:
        return encode(counts)

    def level(self, idx: int) -> int:
        return int(idx).bit_length()

    def successor(self, idx: int, xi: int) -> int:
        return int(self.nxt[idx, xi - 1])

    def step_weights(self) -> list:
        return self.law.vector()

    def recurrent_class(self) -> np.ndarray:
        """Boolean mask of the closed class reached from the empty state."""
        w = np.array([float(x) for x in self.step_weights()])
        n, K = self.nxt.shape
        cols = [j for j in range(K) if w[j] > 0]
        rows = np.repeat(np.arange(n), len(cols))
        targets = self.nxt[:, cols].ravel()
        graph = csr_matrix((np.ones(len(rows)), (rows, targets)), shape=(n, n))
        reach = np.zeros(n, dtype=bool)
        reach[0] = True
        frontier = [0]
        while frontier:
            nb = np.unique(self.nxt[frontier][:, cols])
            nb = nb[~reach[nb]]
            reach[nb] = True
            frontier = nb.tolist()
        ncomp, labels = connected_components(graph, directed=True, connection="strong")
        closed = []
        for c in np.unique(labels[reach]):
            members = labels == c
            outs = self.nxt[members][:, cols]
            if np.all(labels[outs] == c):
                closed.append(c)
        if len(closed) != 1:
            raise ReducibleChainError(
                f"{len(closed)} closed classes reachable from the empty state")
        return labels == closed[0]


def build_chain(dist: Distribution) -> ChainModel:
    """Enumerate the reduced chain of ``dist`` with all successor indices."""
    if not isinstance(dist, Distribution):
        raise TypeError("build_chain needs a finitely supported Distribution")
    K = dist.K
    if K < 1:
        raise ValueError("support bound must be >= 1")
    if K > ITERATIVE_MAX_K:
        raise ValueError(f"K={K} exceeds the enumeration ceiling {ITERATIVE_MAX_K}")
    nxt, front = _build_tables(K)
    return ChainModel(K, dist, nxt, front)


# --- stationary law -------------------------------------------------------

@dataclass
class StationaryDist:
    probabilities: Union[list, np.ndarray]
    mode: str
    residual: float = 0.0
    iterations: int = 0
    class_size: int = 0

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    def __getitem__(self, idx):
        return self.probabilities[idx]

    def __len__(self):
        return len(self.probabilities)


def _common_denominator(weights) -> tuple[list[int], int]:
    fr = [as_fraction(w) for w in weights]
    D = math.lcm(*(f.denominator for f in fr))
    return [int(f * D) for f in fr], int(D)


def _stationary_exact(chain: ChainModel, mask: np.ndarray,
                      solver: str = "auto") -> StationaryDist:
    K, n = chain.K, chain.n_states
    c, D = _common_denominator(chain.step_weights())
    if K == 1:
        return StationaryDist([Fraction(1)], EXACT, class_size=1)
    top0 = top_start(K)
    nxt = chain.nxt.tolist()
    live = [j for j in range(K) if c[j]]
    top_states = [i for i in range(top0, n) if mask[i]]
    # A[r][q]: mass returning to full-level state q per unit mass leaving
    # full-level state r, scaled by D**K to stay integral.  Mass at level l
    # is kept scaled by D**(l+1).
    A = []
    for t in top_states:
        mass = {}
        for j in live:
            s = nxt[t][j]
            lvl = s.bit_length()
            mass[s] = mass.get(s, 0) + c[j] * D**lvl
        for i in range(top0):
            m = mass.pop(i, 0)
            if m:
                row = nxt[i]
                for j in live:
                    s = row[j]
                    mass[s] = mass.get(s, 0) + m * c[j]
        A.append([mass.get(q, 0) for q in top_states])
    if solver == "auto":
        solver = "bareiss" if len(top_states) <= BAREISS_MAX_STATES else "modular"
    if solver == "bareiss":
        x = left_null_vector(A, D**K)
    elif solver == "modular":
        x = modular_left_null_vector(A, D**K)
    else:
        raise ValueError(f"unknown exact solver {solver!r}")
    # carry the full-level law through the lower levels once
    pi: list = [Fraction(0)] * n
    for r, t in enumerate(top_states):
        pi[t] = x[r]
    flow = [Fraction(0)] * top0
    for t in top_states:
        xt = pi[t]
        if xt:
            for j in live:
                s = nxt[t][j]
                if s < top0:
                    flow[s] += xt * c[j] / D
    for i in range(top0):
        m = flow[i]
        if m:
            pi[i] = m
            for j in live:
                s = nxt[i][j]
                if s < top0:
                    flow[s] += m * c[j] / D
    total = sum(pi)
    pi = [v / total for v in pi]
    return StationaryDist(pi, EXACT, residual=0.0, class_size=int(mask.sum()))


def _stationary_iterative(chain: ChainModel, mask: np.ndarray,
                          tol: float = RESIDUAL_TOL,
                          max_iter: int = MAX_ITERATIONS) -> StationaryDist:
    K, n = chain.K, chain.n_states
    w = np.array([float(v) for v in chain.step_weights()])
    if K == 1:
        return StationaryDist(np.ones(1), ITERATIVE, class_size=1)
    top0 = top_start(K)
    x = np.zeros(n)
    x[top0:][mask[top0:]] = 1.0
    x /= x.sum()
    out = np.empty(n)
    pi = np.empty(n)
    Ppi = np.empty(n)
    # a little laziness removes any periodicity of the embedded chain
    lazy = 0.25
    it = 0
    residual = np.inf
    while it < max_iter:
        _sweep(chain.nxt, w, x, out, top0)
        it += 1
        new_top = lazy * x[top0:] + (1 - lazy) * out[top0:]
        change = np.abs(new_top - x[top0:]).sum()
        x[top0:] = new_top / new_top.sum()
        if change < tol * 0.05 or it % 64 == 0:
            pi[:top0] = out[:top0]
            pi[top0:] = x[top0:]
            pi /= pi.sum()
            _apply(chain.nxt, w, pi, Ppi)
            residual = float(np.abs(Ppi - pi).sum())
            if residual <= tol:
                return StationaryDist(pi.copy(), ITERATIVE, residual, it,
                                      int(mask.sum()))
            if change < 1e-17:
                break
    raise ConvergenceError(
        f"no convergence after {it} sweeps (residual {residual:.3e})")


def stationary(chain: ChainModel, mode: str = EXACT,
               solver: str = "auto") -> StationaryDist:
    """Stationary law of the chain on the closed class of the empty state.

    EXACT mode eliminates the lower levels first (they are reached from the
    full level along increasing levels only), leaving a dense integer system
    on the full level.  ``solver`` picks Bareiss elimination or a certified
    multi-modular solve for that system; ``"auto"`` uses Bareiss on small
    systems.  ITERATIVE mode runs power iteration on the same embedded chain.
    """
    mask = chain.recurrent_class()
    if mode == EXACT:
        return _stationary_exact(chain, mask, solver)
    if mode == ITERATIVE:
        return _stationary_iterative(chain, mask)
    raise ValueError(f"unknown mode {mode!r}")


# --- speed functionals ----------------------------------------------------

def _zero_like(pi: StationaryDist):
    return Fraction(0) if pi.exact else 0.0


def front_advance_rate(chain: ChainModel, pi: StationaryDist):
    """Probability under ``pi`` that the next (finite) move opens a new bin."""
    law = chain.law
    cdf = [law.cdf(k) for k in range(chain.K + 1)]
    if not pi.exact:
        cdf = np.array([float(v) for v in cdf])
        return float(np.dot(np.asarray(pi.probabilities), cdf[chain.front_count]))
    fc = chain.front_count.tolist()
    acc = Fraction(0)
    for i, p in enumerate(pi.probabilities):
        if p:
            acc += p * cdf[fc[i]]
    return acc


def freeze_rate(chain: ChainModel, pi: StationaryDist):
    """Rate at which the window slides, i.e. the mass of the full level."""
    top0 = top_start(chain.K)
    probs = pi.probabilities
    if pi.exact:
        return sum(probs[top0:], Fraction(0)) * chain.dist.finite_mass
    return float(np.sum(probs[top0:])) * float(chain.dist.finite_mass)


def speed_exact(chain: ChainModel, pi: StationaryDist):
    """Front speed ``v_mu``; a ``Fraction`` when ``pi`` is exact."""
    scale = chain.dist.finite_mass
    rate = front_advance_rate(chain, pi)
    if pi.exact:
        return rate * scale
    return rate * float(scale)


def speed(dist: Distribution, mode: Optional[str] = None):
    """Convenience wrapper: build, solve and evaluate in one call."""
    if mode is None:
        mode = EXACT if dist.exact and dist.K <= EXACT_MAX_K else ITERATIVE
    if mode == EXACT and not dist.exact:
        dist = Distribution({k: as_fraction(w) for k, w in dist.weights.items()},
                            1 - sum(as_fraction(w) for w in dist.weights.values()),
                            label=dist.label)
    chain = build_chain(dist)
    return speed_exact(chain, stationary(chain, mode))


def speed_lower_bound(dist: Distribution):
    """``mu({K0}) / K0`` for the smallest atom ``K0``."""
    K0 = dist.K0
    return dist.weight(K0) / K0


def cp_bounds(k: int, p, mode: Optional[str] = None) -> tuple:
    """Lower and upper bounds ``(L_k(p), U_k(p))`` on the growth rate ``C(p)``.

    ``p`` may be a ``Fraction`` (exact arithmetic) or a float.  In exact mode
    floats are first rounded to a fraction with denominator at most 10**6.
    """
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode is None:
        mode = EXACT if k <= EXACT_MAX_K and not isinstance(p, float) else ITERATIVE
    if mode == EXACT:
        p = as_fraction(p)
    else:
        p = float(p)
    lo = speed(truncated_geometric(p, k, "lower"), mode)
    hi = speed(truncated_geometric(p, k, "upper"), mode)
    return lo, hi


def project(X: BinConfig, K: int) -> tuple[int, ...]:
    """Contents of the ``K-1`` bins starting at ``B(X, K)``."""
    start = ball_pos(X, K)
    out = []
    for j in range(start, start + K - 1):
        c = X.count(j)
        out.append(int(c))
    return tuple(out)


def render(value) -> str:
    """Rationals as ``num/den``, floats as their shortest round-trip repr."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return repr(float(value))


def bounds_rows(ks: Sequence[int], ps: Sequence, mode: Optional[str] = None):
    """CSV rows ``k,p,L_k,U_k,width`` for a grid of points."""
    rows = []
    for k in ks:
        for p in ps:
            lo, hi = cp_bounds(k, p, mode)
            rows.append((k, render(p), render(lo), render(hi), render(hi - lo)))
    return rows

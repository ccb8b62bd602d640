"""Words of moves: front displacement, the signed indicator and series.

A word ``alpha = (a1, ..., an)`` is a finite sequence of move types.  Its
length is ``L = n`` and its height ``H = sum(a) - n``.  ``epsilon(X, alpha)``
is the {-1, 0, 1}-valued indicator

    1[alpha opens a new bin from X] - 1[alpha minus its first letter does],

whose weighted sum over all words equals the front speed.  Only words with
``L <= H + 1`` can carry a nonzero value, which keeps every height class
finite and makes the expansion around ``p = 1`` computable.

Two routes are provided.  The reference functions replay words on
:class:`BinConfig` values one at a time.  The enumerator walks the word tree
depth first with two replayers in lockstep (one for ``alpha`` and one for
``alpha`` minus its first letter), reverting each move by decrementing the
single bin it filled, so every enumeration step costs O(max letter).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

import numba
import numpy as np

from .config import CANONICAL, INFINITY, BinConfig, apply_word, ball_pos
from .distribution import Distribution, Geometric

log = logging.getLogger(__name__)

COEFF_MAX_K = 10
TAIL_ACCESS = -1
BIG = 1 << 40


class Word(tuple):
    """Immutable word over the positive integers."""

    def __new__(cls, letters: Iterable[int] = ()):
        letters = tuple(int(a) for a in letters)
        if any(a < 1 for a in letters):
            raise ValueError(f"letters must be >= 1, got {letters}")
        return super().__new__(cls, letters)

    @property
    def length(self) -> int:
        return len(self)

    @property
    def height(self) -> int:
        return sum(self) - len(self)

    def drop_last(self) -> "Word":
        return Word(self[:-1])

    def drop_first(self) -> "Word":
        return Word(self[1:])

    def __repr__(self) -> str:
        return f"Word{tuple(self)}"


def length(alpha: Sequence[int]) -> int:
    return len(alpha)


def height(alpha: Sequence[int]) -> int:
    return sum(alpha) - len(alpha)


def weight(alpha: Sequence[int], dist: Union[Distribution, Geometric]) -> float:
    """Probability that the first ``len(alpha)`` moves spell ``alpha``."""
    w = 1.0
    for a in alpha:
        w *= float(dist.weight(a))
    return w


# --- reference route -------------------------------------------------------

def displacement(X: BinConfig, alpha: Sequence[int]) -> int:
    """Front movement after replaying ``alpha`` from ``X``."""
    return ball_pos(apply_word(X, alpha), 1) - ball_pos(X, 1)


def opens_bin(X: BinConfig, alpha: Sequence[int]) -> bool:
    """True when ``alpha`` is non-empty and its last move fills an empty bin."""
    if not alpha:
        return False
    Y = apply_word(X, alpha[:-1])
    last = alpha[-1]
    if last == INFINITY:
        return False
    return ball_pos(Y, int(last)) == Y.front + 1


def epsilon(X: BinConfig, alpha: Sequence[int], method: str = "membership") -> int:
    """Signed indicator of ``alpha``.

    ``method="membership"`` compares where the last move lands for ``alpha``
    and for ``alpha`` without its first letter; ``method="displacement"``
    takes the second difference of front displacements.  Both agree.
    """
    alpha = tuple(alpha)
    if not alpha:
        raise ValueError("epsilon is undefined for the empty word")
    if method == "membership":
        return int(opens_bin(X, alpha)) - int(opens_bin(X, alpha[1:]))
    if method == "displacement":
        return (displacement(X, alpha) - displacement(X, alpha[:-1])
                - displacement(X, alpha[1:]) + displacement(X, alpha[1:-1]))
    raise ValueError(f"unknown method {method!r}")


def has_renovation(alpha: Sequence[int]) -> Optional[int]:
    """Smallest 1-based position ``n >= 2`` with ``alpha[n+k] <= k+1`` for all k.

    Returns ``None`` when no such position exists.
    """
    if not alpha:
        raise ValueError("renovation is undefined for the empty word")
    l = len(alpha)
    # position n works iff alpha[j] <= j - n + 1 for every j >= n (1-based)
    for n in range(2, l + 1):
        if all(alpha[j - 1] <= j - n + 1 for j in range(n, l + 1)):
            return n
    return None


# --- depth-first enumerator -------------------------------------------------

@numba.njit(cache=True)
def _drop(c, front, xi):
    """Landing index of a move of type ``xi``; TAIL_ACCESS if the scan falls off."""
    total = 0
    j = front
    while j >= 0:
        total += c[j]
        if total >= xi:
            return j + 1
        j -= 1
    return -1


@numba.njit(cache=True)
def _can_recover(l, h, max_len, max_letter, max_height):
    """Whether some extension of a prefix reaches ``L <= H + 1`` within bounds.

    A letter ``a`` changes ``L - H`` by ``2 - a`` at a height cost ``a - 1``,
    so the cheapest repair of a deficit uses the largest letter only.
    """
    deficit = l - h - 1
    if deficit <= 0:
        return True
    if max_letter <= 2:
        return False
    m = (deficit + max_letter - 3) // (max_letter - 2)
    return l + m <= max_len and h + deficit + m <= max_height


@numba.njit(cache=True)
def _enumerate(base, f0, max_len, max_letter, max_height, mu, first_letter,
               supported_only, record, codes, eps_out, disp_out):
    """Walk all words within the bounds, accumulating per (height, length).

    Returns ``(E, S, N, NZ, n_recorded, ok)``: integer sums of epsilon,
    weighted sums, word counts and nonzero counts per class.
    """
    E = np.zeros((max_height + 1, max_len + 1), dtype=np.int64)
    S = np.zeros((max_height + 1, max_len + 1), dtype=np.float64)
    N = np.zeros((max_height + 1, max_len + 1), dtype=np.int64)
    NZ = np.zeros((max_height + 1, max_len + 1), dtype=np.int64)
    c1 = base.copy()
    c2 = base.copy()
    front1 = f0
    front2 = f0
    letter = np.zeros(max_len + 1, dtype=np.int64)
    land1 = np.zeros(max_len + 1, dtype=np.int64)
    land2 = np.zeros(max_len + 1, dtype=np.int64)
    pf1 = np.zeros(max_len + 1, dtype=np.int64)
    pf2 = np.zeros(max_len + 1, dtype=np.int64)
    wprod = np.ones(max_len + 2, dtype=np.float64)
    code = np.zeros(max_len + 2, dtype=np.int64)
    radix = max_letter + 1
    n_rec = 0
    h = 0
    d = 0
    while d >= 0:
        a = letter[d]
        if a > 0:
            # revert the move made at this depth
            c1[land1[d]] -= 1
            front1 = pf1[d]
            if d >= 1:
                c2[land2[d]] -= 1
                front2 = pf2[d]
            h -= a - 1
        if d == 0 and first_letter > 0:
            a = first_letter if a == 0 else max_letter + 1
            if a <= max_letter and mu[a] == 0.0:
                a = max_letter + 1
        else:
            a += 1
            while a <= max_letter and mu[a] == 0.0:
                a += 1
        if a > max_letter or h + a - 1 > max_height:
            letter[d] = 0
            d -= 1
            continue
        letter[d] = a
        h += a - 1
        b = _drop(c1, front1, a)
        if b < 0:
            return E, S, N, NZ, n_rec, False
        pf1[d] = front1
        land1[d] = b
        c1[b] += 1
        adv1 = 0
        if b > front1:
            front1 = b
            adv1 = 1
        adv2 = 0
        if d >= 1:
            b2 = _drop(c2, front2, a)
            if b2 < 0:
                return E, S, N, NZ, n_rec, False
            pf2[d] = front2
            land2[d] = b2
            c2[b2] += 1
            if b2 > front2:
                front2 = b2
                adv2 = 1
        wprod[d + 1] = wprod[d] * mu[a]
        code[d + 1] = code[d] * radix + a
        L = d + 1
        if (not supported_only) or L <= h + 1:
            e = adv1 - adv2
            E[h, L] += e
            S[h, L] += e * wprod[d + 1]
            N[h, L] += 1
            if e != 0:
                NZ[h, L] += 1
            if record:
                codes[n_rec] = code[d + 1]
                eps_out[n_rec] = e
                disp_out[n_rec] = front1 - f0
                n_rec += 1
        if d + 1 < max_len and (not supported_only or
                                _can_recover(L, h, max_len, max_letter, max_height)):
            d += 1
            letter[d] = 0
    return E, S, N, NZ, n_rec, True


def _replay_window(X: BinConfig, max_len: int, max_letter: int):
    """Array of bin counts wide enough that no replay reaches the tail."""
    lo = min(X.offset, X.front) - max_letter - 2
    hi = X.front + max_len + 2
    base = np.empty(hi - lo + 1, dtype=np.int64)
    for j in range(lo, hi + 1):
        c = X.count(j)
        base[j - lo] = BIG if c == INFINITY else int(c)
    return base, X.front - lo


@dataclass
class Enumeration:
    """Per-class aggregates of an enumeration run, indexed ``[height, length]``."""

    eps_sum: np.ndarray
    weighted: np.ndarray
    words: np.ndarray
    nonzero: np.ndarray
    records: Optional[dict] = None


def enumerate_words(X: BinConfig, max_len: int, max_letter: int,
                    max_height: Optional[int] = None, mu=None,
                    first_letter: int = 0, supported_only: bool = True,
                    record: bool = False) -> Enumeration:
    """Enumerate words with ``L <= max_len``, letters ``<= max_letter``, ``H <= max_height``.

    ``mu`` (indexed by letter) weights each word and excludes letters of
    weight zero.  With ``record=True`` the result maps every visited word
    to ``(epsilon, displacement)``.
    """
    if max_height is None:
        max_height = max_len * (max_letter - 1)
    mu_arr = np.ones(max_letter + 1)
    if mu is not None:
        for a in range(1, max_letter + 1):
            mu_arr[a] = float(mu[a]) if a < len(mu) else 0.0
    mu_arr[0] = 0.0
    base, f0 = _replay_window(X, max_len, max_letter)
    cap = count_words(max_len, max_letter, max_height, supported_only) if record else 1
    codes = np.zeros(cap, dtype=np.int64)
    eps = np.zeros(cap, dtype=np.int64)
    disp = np.zeros(cap, dtype=np.int64)
    E, S, N, NZ, n_rec, ok = _enumerate(base, f0, max_len, max_letter, max_height,
                                        mu_arr, first_letter, supported_only,
                                        record, codes, eps, disp)
    if not ok:
        raise RuntimeError("replay reached the configuration tail; window too small")
    records = None
    if record:
        radix = max_letter + 1
        records = {}
        for code, e, dd in zip(codes[:n_rec].tolist(), eps[:n_rec].tolist(),
                               disp[:n_rec].tolist()):
            records[_decode_word(code, radix)] = (e, dd)
    return Enumeration(E, S, N, NZ, records)


def _decode_word(code: int, radix: int) -> tuple[int, ...]:
    out = []
    while code:
        code, a = divmod(code, radix)
        out.append(a)
    return tuple(reversed(out))


def count_words(max_len: int, max_letter: int, max_height: int,
                supported_only: bool = False) -> int:
    """Number of words within the bounds (optionally only those with ``L <= H+1``)."""
    # ways[l][h]: words of length l and height h with letters <= max_letter
    ways = [[0] * (max_height + 1) for _ in range(max_len + 1)]
    ways[0][0] = 1
    for l in range(1, max_len + 1):
        for h in range(max_height + 1):
            ways[l][h] = sum(ways[l - 1][h - (a - 1)]
                             for a in range(1, min(max_letter, h + 1) + 1))
    return sum(ways[l][h] for l in range(1, max_len + 1) for h in range(max_height + 1)
               if not supported_only or l <= h + 1)


def class_size(h: int, l: int) -> int:
    """Words of height ``h`` and length ``l``: compositions of ``h + l`` into ``l`` parts."""
    if l == 0:
        return int(h == 0)
    return math.comb(h + l - 1, l - 1)


# --- coefficients -----------------------------------------------------------

@dataclass
class CoeffTable:
    """Integer coefficients of the expansion of the growth rate around ``p = 1``."""

    values: tuple[int, ...]
    kmax: int
    label: str
    classes: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, k: int) -> int:
        return self.values[k]

    def conjecture_holds(self) -> bool:
        """``(-1)**k a_k`` non-negative and non-decreasing over the table."""
        signed = [(-1) ** k * a for k, a in enumerate(self.values)]
        return all(s >= 0 for s in signed) and all(
            x <= y for x, y in zip(signed, signed[1:]))

    def evaluate(self, q: float) -> float:
        return sum(a * q**k for k, a in enumerate(self.values))

    def diagnostics(self) -> list[dict]:
        return [{"height": h, "length": l, "words": n, "nonzero": nz, "eps_sum": e}
                for (h, l), (n, nz, e) in sorted(self.classes.items())]


def _coeff_partition(args):
    X, kmax, first = args
    en = enumerate_words(X, kmax + 1, kmax + 1, kmax, first_letter=first)
    return en.eps_sum, en.words, en.nonzero


def coeff_table(kmax: int, X: BinConfig = CANONICAL, label: str = "canonical",
                workers: int = 1) -> CoeffTable:
    """Exact coefficients ``a_0 .. a_kmax`` computed from configuration ``X``.

    The enumeration is partitioned by first letter; partitions are reduced
    by integer summation, optionally across ``workers`` processes.
    """
    if not 0 <= kmax <= COEFF_MAX_K:
        raise ValueError(f"kmax must lie in [0, {COEFF_MAX_K}], got {kmax}")
    jobs = [(X, kmax, a) for a in range(1, kmax + 2)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_coeff_partition, jobs))
    else:
        parts = [_coeff_partition(j) for j in jobs]
    E = sum(p[0] for p in parts)
    Ncount = sum(p[1] for p in parts)
    NZ = sum(p[2] for p in parts)
    values = []
    for k in range(kmax + 1):
        a = 0
        for h in range(k + 1):
            for l in range(1, k + 2):
                e = int(E[h, l])
                if e:
                    a += e * (-1) ** (k - h) * math.comb(l, k - h)
        values.append(a)
    classes = {(h, l): (int(Ncount[h, l]), int(NZ[h, l]), int(E[h, l]))
               for h in range(kmax + 1) for l in range(1, kmax + 2) if Ncount[h, l]}
    return CoeffTable(tuple(values), kmax, label, classes)


# --- series -----------------------------------------------------------------

class SeriesMode(Enum):
    PLAIN = "plain"
    CESARO = "cesaro"


@dataclass
class SeriesResult:
    value: float
    mode: SeriesMode
    h_max: int
    terms: int
    tail_bound: float
    formal: bool
    partial_sums: list = field(default_factory=list, repr=False)


def _letter_weights(dist, max_letter: int) -> np.ndarray:
    return np.array([0.0] + [float(dist.weight(a)) for a in range(1, max_letter + 1)])


@numba.njit(cache=True)
def _candidate_mass(w, h_to):
    """Weight per height of words with no renovation at any position ``n >= 2``.

    Words are built by prepending letters.  For a suffix ``beta`` the state
    ``g = min_j (j - beta_j + 1)`` decides renovation at its first position
    (it renovates iff ``g >= 1``); prepending ``a`` maps ``g`` to
    ``min(2 - a, g + 1)``.  Only suffixes with ``g <= 0`` may be extended.
    """
    G0 = h_to + 1  # g ranges over [-h_to, 1]
    V = np.zeros((h_to + 1, h_to + 3))
    A = min(len(w) - 1, h_to + 1)
    for a in range(1, A + 1):
        V[a - 1, 2 - a + G0] += w[a]
    for h in range(h_to + 1):
        for gi in range(0, G0 + 1):  # g <= 0: extendable
            m = V[h, gi]
            if m == 0.0:
                continue
            g = gi - G0
            for a in range(1, A + 1):
                nh = h + a - 1
                if nh > h_to:
                    break
                if w[a] == 0.0:
                    continue
                ng = min(2 - a, g + 1)
                V[nh, ng + G0] += m * w[a]
    return V.sum(axis=1)


def candidate_mass(dist, h_to: int) -> np.ndarray:
    """Total weight of words that can carry a nonzero epsilon, per height ``0..h_to``.

    Any word with a renovation at a position ``n >= 2`` has epsilon 0, so
    the tail of these masses bounds the series remainder.
    """
    return _candidate_mass(_letter_weights(dist, h_to + 1), h_to)


def tail_bound(dist, h_max: int, horizon: int = 400) -> float:
    """Bound on ``sum |epsilon| W`` over heights above ``h_max``.

    Heights up to ``h_max + horizon`` are summed exactly; the remainder is
    extrapolated geometrically from the last class ratio, and reported as
    infinite when the classes do not decay.
    """
    m = candidate_mass(dist, h_max + horizon)[h_max + 1:]
    if len(m) < 2 or m[-1] == 0.0:
        return float(m.sum())
    r = m[-1] / m[-2]
    if not r < 1.0:
        return math.inf
    return float(m.sum() + m[-1] * r / (1.0 - r))


def series_speed(dist: Union[Distribution, Geometric], X: BinConfig = CANONICAL,
                 h_max: int = 8, mode: SeriesMode = SeriesMode.PLAIN,
                 n_terms: Optional[int] = None) -> SeriesResult:
    """Partial sums of the word series for the speed of ``dist``.

    PLAIN sums ``epsilon * W`` over all words of height ``<= h_max``.
    CESARO averages the partial sums over words of length ``<= k`` for
    ``k = 1 .. n_terms`` (default ``h_max + 1``); for laws with unbounded
    support the words are additionally cut at height ``h_max``.  The result
    is flagged ``formal`` when absolute convergence is not guaranteed.
    """
    mode = SeriesMode(mode)
    if isinstance(dist, Distribution) and dist.mass_at_infinity:
        raise ValueError("condition the law on finite moves first")
    geometric_p = float(dist.p) if isinstance(dist, Geometric) else None
    formal = geometric_p is not None and geometric_p <= 0.5
    if formal:
        log.warning("geometric p=%s <= 1/2: the series is only formal", geometric_p)
    if mode is SeriesMode.PLAIN:
        max_letter = h_max + 1
        if isinstance(dist, Distribution):
            max_letter = min(max_letter, dist.K)
        mu = _letter_weights(dist, max_letter)
        en = enumerate_words(CANONICAL if X is None else X, h_max + 1, max_letter,
                             h_max, mu=mu)
        by_height = en.weighted.sum(axis=1)
        partial = np.cumsum(by_height).tolist()
        bound = tail_bound(dist, h_max)
        formal = formal or not math.isfinite(bound)
        return SeriesResult(partial[-1], mode, h_max, int(en.words.sum()), bound,
                            formal, partial)
    n = n_terms if n_terms is not None else h_max + 1
    if isinstance(dist, Distribution):
        max_letter = dist.K
        max_height = n * (max_letter - 1)
    else:
        max_letter = h_max + 1
        max_height = h_max
    mu = _letter_weights(dist, max_letter)
    en = enumerate_words(CANONICAL if X is None else X, n, max_letter, max_height, mu=mu)
    by_length = en.weighted.sum(axis=0)[1:]
    partial = np.cumsum(by_length)
    value = float(partial.mean())
    return SeriesResult(value, mode, h_max, int(en.words.sum()), math.nan, True,
                        partial.tolist())

"""Ball-in-bins configurations of the infinite-bin model.

A configuration assigns a number of balls to every integer bin.  Only a
finite window of bins is stored; everything left of the window is described
by a tail that holds either exactly one ball per bin (``Tail.FLAT``) or
infinitely many balls per bin (``Tail.INFINITE``).  Bins right of the window
are empty.

Counting conventions follow the usual ones for this model: balls are counted
from the right, ``n_right(X, k)`` is the number of balls in bins ``>= k`` and
``ball_pos(X, xi)`` is the leftmost bin with fewer than ``xi`` balls to its
right.  A move of type ``xi`` drops one ball into ``ball_pos(X, xi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

INFINITY = math.inf
COUNT_LIMIT = 2**62

MoveType = Union[int, float]


class Tail(Enum):
    FLAT = "flat"
    INFINITE = "infinite"


class ConfigError(ValueError):
    """Raised for inadmissible configurations or malformed literals."""


@dataclass(frozen=True)
class BinConfig:
    """Admissible configuration with a finite window and a lawful tail.

    ``counts[i]`` is the number of balls in bin ``offset + i``.  Instances are
    normalised on construction: trailing empty bins are dropped and, for a
    flat tail, leading single-ball bins are absorbed into the tail.  Two
    configurations describing the same ball arrangement therefore compare
    equal.
    """

    counts: tuple[int, ...]
    offset: int
    tail: Tail = Tail.FLAT

    def __post_init__(self):
        counts = [int(c) for c in self.counts]
        offset = int(self.offset)
        while counts and counts[-1] == 0:
            counts.pop()
        for c in counts:
            if c < 1:
                raise ConfigError(
                    f"bin left of the front is empty in window {self.counts!r}")
            if c > COUNT_LIMIT:
                raise OverflowError(f"bin count {c} exceeds 2**62")
        if self.tail is Tail.FLAT:
            lead = 0
            while lead < len(counts) and counts[lead] == 1:
                lead += 1
            counts = counts[lead:]
            offset += lead
        object.__setattr__(self, "counts", tuple(counts))
        object.__setattr__(self, "offset", offset)

    @property
    def front(self) -> int:
        return self.offset + len(self.counts) - 1

    @property
    def window_balls(self) -> int:
        return sum(self.counts)

    def count(self, j: int) -> MoveType:
        """Number of balls in bin ``j``."""
        if j >= self.offset:
            i = j - self.offset
            return self.counts[i] if i < len(self.counts) else 0
        return 1 if self.tail is Tail.FLAT else INFINITY

    def __str__(self) -> str:
        return format_config(self)


def flat(front: int = 0) -> BinConfig:
    """One ball in every bin ``<= front``."""
    return BinConfig((), front + 1, Tail.FLAT)


def infinite_bin(front: int = 0) -> BinConfig:
    """Infinitely many balls in every bin ``<= front``, nothing else."""
    return BinConfig((), front + 1, Tail.INFINITE)


CANONICAL = flat(0)
ALTERNATIVE = infinite_bin(0)


def n_right(X: BinConfig, k: int) -> MoveType:
    """Number of balls in bins ``>= k``; ``INFINITY`` inside an infinite tail."""
    if k >= X.offset:
        return sum(X.counts[k - X.offset:])
    if X.tail is Tail.INFINITE:
        return INFINITY
    return X.window_balls + (X.offset - k)


def ball_pos(X: BinConfig, xi: int) -> int:
    """Leftmost bin ``j`` with ``n_right(X, j) < xi``."""
    if xi < 1:
        raise ValueError(f"move type must be >= 1, got {xi}")
    total = 0
    for i in range(len(X.counts) - 1, -1, -1):
        total += X.counts[i]
        if total >= xi:
            return X.offset + i + 1
    if X.tail is Tail.INFINITE:
        return X.offset
    return X.offset - (xi - total - 1)


def apply_move(X: BinConfig, xi: MoveType) -> BinConfig:
    """Add one ball at ``ball_pos(X, xi)``; a move of type infinity is a no-op."""
    if xi == INFINITY:
        return X
    b = ball_pos(X, int(xi))
    counts = list(X.counts)
    offset = X.offset
    if b < offset:
        # only reachable with a flat tail: materialise the tail bins
        counts = [1] * (offset - b) + counts
        offset = b
    i = b - offset
    if i >= len(counts):
        counts.extend([0] * (i - len(counts) + 1))
    counts[i] += 1
    return BinConfig(tuple(counts), offset, X.tail)


def apply_word(X: BinConfig, word: Iterable[MoveType]) -> BinConfig:
    for xi in word:
        X = apply_move(X, xi)
    return X


def shift(X: BinConfig, by: int = 1) -> BinConfig:
    """Translate every bin ``by`` positions to the right."""
    return BinConfig(X.counts, X.offset + by, X.tail)


def _tail_threshold(X: BinConfig) -> int:
    # for xi above this value ball_pos lies in the tail
    return X.window_balls + 1


def dominates(X: BinConfig, Y: BinConfig) -> bool:
    """``X <= Y`` in the ball-counting order: ``B(X, xi) <= B(Y, xi)`` for all xi.

    Beyond both windows the comparison no longer depends on ``xi`` except
    when ``X`` has an infinite tail and ``Y`` a flat one, in which case
    ``B(Y, xi)`` eventually drops below the constant ``B(X, xi)``.
    """
    if X.tail is Tail.INFINITE and Y.tail is Tail.FLAT:
        return False
    upto = max(_tail_threshold(X), _tail_threshold(Y))
    return all(ball_pos(X, xi) <= ball_pos(Y, xi) for xi in range(1, upto + 1))


def materialize(X: BinConfig, left: int) -> tuple[list[int], int]:
    """Window counts extended leftwards so that it starts at bin ``left``.

    Only meaningful for flat tails; returns ``(counts, offset)``.
    """
    if X.tail is Tail.INFINITE:
        raise ConfigError("cannot materialise an infinite tail")
    pad = max(0, X.offset - left)
    return [1] * pad + list(X.counts), X.offset - pad


def parse_config(text: str) -> BinConfig:
    """Parse ``tail=flat;offset=-3;counts=1,1,1,2``."""
    fields = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, value = part.partition("=")
        if not sep:
            raise ConfigError(f"malformed field {part!r} in {text!r}")
        fields[key.strip()] = value.strip()
    try:
        tail = Tail(fields.get("tail", "flat"))
        offset = int(fields["offset"])
        raw = fields.get("counts", "")
        counts = tuple(int(c) for c in raw.split(",") if c.strip())
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad configuration literal {text!r}: {exc}") from None
    return BinConfig(counts, offset, tail)


def format_config(X: BinConfig) -> str:
    counts = ",".join(str(c) for c in X.counts)
    return f"tail={X.tail.value};offset={X.offset};counts={counts}"


def from_counts(counts: Sequence[int], offset: int, tail: str = "flat") -> BinConfig:
    return BinConfig(tuple(counts), offset, Tail(tail))

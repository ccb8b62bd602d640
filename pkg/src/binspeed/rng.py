"""Counter-based SplitMix64 streams usable from numba kernels.

Draw ``i`` of stream ``(seed, stream)`` is ``mix(key + (i + 1) * GAMMA)``
where ``key`` is derived from the pair by mixing, so any replica's sequence
is fixed by its index alone and never depends on scheduling.
"""

from __future__ import annotations

import math

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finaliser on Python integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int = 0) -> np.uint64:
    """Key of replica ``stream`` under master ``seed``."""
    k = mix64(mix64(seed & MASK64) ^ ((stream * 0xD1B54A32D192ED03 + 1) & MASK64))
    return np.uint64(k)


@numba.njit(cache=True, nogil=True)
def draw(key, ctr):
    """64-bit output number ``ctr`` of the stream with ``key``."""
    z = key + (ctr + np.uint64(1)) * np.uint64(GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True, nogil=True)
def uniform_open(key, ctr):
    """Uniform double in ``(0, 1]``."""
    return (float(draw(key, ctr) >> np.uint64(11)) + 1.0) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True, nogil=True)
def geometric(key, ctr, log1mp):
    """Geometric variable on ``{1, 2, ...}`` by inversion; ``log1mp = log(1-p)``.

    ``log1mp = 0`` (p = 0) yields a huge value standing for infinity and
    ``log1mp = -inf`` (p = 1) always yields 1.
    """
    if log1mp == 0.0:
        return np.int64(1) << np.int64(62)
    u = uniform_open(key, ctr)
    x = math.floor(math.log(u) / log1mp)
    if x > 4.0e18:
        return np.int64(1) << np.int64(62)
    return np.int64(x) + 1


@numba.njit(cache=True, nogil=True)
def exponential(key, ctr):
    return -math.log(uniform_open(key, ctr))


def log1m(p: float) -> float:
    """``log(1 - p)`` with the endpoint conventions used by :func:`geometric`."""
    if p >= 1.0:
        return -math.inf
    return math.log1p(-p)

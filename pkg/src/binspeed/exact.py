"""Fraction-free linear algebra over the integers."""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt
from typing import Sequence

import numba
import numpy as np


class SingularMatrixError(ArithmeticError):
    pass


def bareiss_solve(M: Sequence[Sequence[int]], b: Sequence[int]) -> list[Fraction]:
    """Solve ``M x = b`` exactly for a square non-singular integer matrix.

    Bareiss elimination keeps every intermediate entry an integer (each one
    is a minor of the augmented matrix), so no fraction arithmetic happens
    until back substitution.
    """
    n = len(M)
    A = [list(row) + [bi] for row, bi in zip(M, b)]
    if any(len(row) != n + 1 for row in A):
        raise ValueError("matrix must be square and match the right-hand side")
    prev = 1
    for k in range(n):
        if A[k][k] == 0:
            for r in range(k + 1, n):
                if A[r][k] != 0:
                    A[k], A[r] = A[r], A[k]
                    break
            else:
                raise SingularMatrixError(f"no pivot in column {k}")
        piv = A[k]
        akk = piv[k]
        ptail = piv[k + 1:]
        for i in range(k + 1, n):
            row = A[i]
            aik = row[k]
            if aik == 0:
                if prev == akk:
                    continue
                tail = [akk * x // prev for x in row[k + 1:]]
            else:
                tail = [(akk * x - aik * y) // prev for x, y in zip(row[k + 1:], ptail)]
            row[k] = 0
            row[k + 1:] = tail
        prev = akk
    # the last pivot is det(M) up to sign; back substitute with a common
    # denominator to avoid fraction normalisation in the inner loop
    det = A[n - 1][n - 1]
    x_num = [0] * n  # x_i = x_num[i] / det
    for i in range(n - 1, -1, -1):
        row = A[i]
        acc = row[n] * det
        for j in range(i + 1, n):
            if row[j]:
                acc -= row[j] * x_num[j]
        q, r = divmod(acc, row[i])
        if r:
            # integrality of adj(M) b guarantees exact division
            raise ArithmeticError("inexact division during back substitution")
        x_num[i] = q
    return [Fraction(v, det) for v in x_num]


def left_null_vector(P: Sequence[Sequence[int]], scale: int) -> list[Fraction]:
    """Probability vector ``x`` with ``x P = scale * x`` for an integer matrix.

    ``P / scale`` must be a stochastic matrix with a single closed class; the
    first balance equation is replaced by the normalisation ``sum(x) = 1``.
    """
    n = len(P)
    if n == 1:
        return [Fraction(1)]
    # rows of (P - scale*I)^T
    M = [[P[i][j] - (scale if i == j else 0) for i in range(n)] for j in range(n)]
    M[0] = [1] * n
    for r in range(1, n):
        g = 0
        for v in M[r]:
            g = gcd(g, v)
            if g == 1:
                break
        if g > 1:
            M[r] = [v // g for v in M[r]]
    b = [1] + [0] * (n - 1)
    return bareiss_solve(M, b)


# --- multi-modular solving ------------------------------------------------

def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for sp in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % sp == 0:
            return n == sp
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def primes_below(bound: int = 2**31):
    """Primes in decreasing order below ``bound``."""
    n = bound - 1
    while n > 2:
        if _is_prime(n):
            yield n
        n -= 2 if n % 2 else 1


@numba.njit(cache=True)
def _powmod(a, e, q):
    r = 1
    a %= q
    while e:
        if e & 1:
            r = r * a % q
        a = a * a % q
        e >>= 1
    return r


@numba.njit(cache=True)
def _gauss_jordan_mod(A, q):
    n = A.shape[0]
    m = A.shape[1]
    for k in range(n):
        r = -1
        for i in range(k, n):
            if A[i, k] != 0:
                r = i
                break
        if r < 0:
            return False
        if r != k:
            for j in range(m):
                t = A[k, j]
                A[k, j] = A[r, j]
                A[r, j] = t
        inv = _powmod(A[k, k], q - 2, q)
        for j in range(k, m):
            A[k, j] = A[k, j] * inv % q
        for i in range(n):
            f = A[i, k]
            if i != k and f != 0:
                for j in range(k, m):
                    A[i, j] = (A[i, j] - f * A[k, j]) % q
    return True


def _solve_mod(N: np.ndarray, b: np.ndarray, q: int):
    """Gauss-Jordan solve of ``N x = b`` modulo a prime ``q < 2**31``."""
    n = N.shape[0]
    A = np.concatenate([N % q, (b % q)[:, None]], axis=1).astype(np.int64)
    if not _gauss_jordan_mod(A, q):
        return None
    return A[:, n]


def rational_reconstruct(a: int, m: int):
    """Fraction ``r/s`` with ``r = a s (mod m)`` and ``|r|, s <= sqrt(m/2)``."""
    a %= m
    bound = isqrt(m // 2)
    r0, r1 = m, a
    s0, s1 = 0, 1
    while r1 > bound:
        qt = r0 // r1
        r0, r1 = r1, r0 - qt * r1
        s0, s1 = s1, s0 - qt * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    return Fraction(r1, s1)


def _reconstruct_vector(res: list[int], m: int):
    out = []
    den = 1
    half = isqrt(m // 2)
    for a in res:
        # try the running common denominator first; it almost always fits
        r = a * den % m
        if r > m // 2:
            r -= m
        if abs(r) <= half:
            out.append(Fraction(r, den))
            continue
        f = rational_reconstruct(a, m)
        if f is None:
            return None
        den = den * f.denominator // gcd(den, f.denominator)
        out.append(f)
    return out


class _LimbMatrix:
    """Integer matrix stored as base-2**30 limbs for fast reduction mod q."""

    BITS = 30

    def __init__(self, M: Sequence[Sequence[int]]):
        n, m = len(M), len(M[0])
        mags = [[abs(v) for v in row] for row in M]
        nbits = max(max(v.bit_length() for v in row) for row in mags)
        nlimbs = max(1, -(-nbits // self.BITS))
        mask = (1 << self.BITS) - 1
        self.limbs = np.zeros((nlimbs, n, m), dtype=np.int64)
        for i, row in enumerate(mags):
            for j, v in enumerate(row):
                l = 0
                while v:
                    self.limbs[l, i, j] = v & mask
                    v >>= self.BITS
                    l += 1
        self.sign = np.array([[1 if v >= 0 else -1 for v in row] for row in M],
                             dtype=np.int64)

    def mod(self, q: int) -> np.ndarray:
        out = np.zeros(self.limbs.shape[1:], dtype=np.int64)
        base = (1 << self.BITS) % q
        scale = 1
        for limb in self.limbs:
            out = (out + (limb % q) * scale) % q
            scale = scale * base % q
        return (out * self.sign) % q


def modular_left_null_vector(P: Sequence[Sequence[int]], scale: int,
                             max_primes: int = 4000) -> list[Fraction]:
    """Same contract as :func:`left_null_vector`, solved modulo many primes.

    Residues are combined by the Chinese remainder theorem and lifted to
    rationals; a candidate is accepted only after it satisfies the balance
    equations exactly over the integers, so the answer is certified.
    """
    n = len(P)
    if n == 1:
        return [Fraction(1)]
    M = [[P[i][j] - (scale if i == j else 0) for i in range(n)] for j in range(n)]
    M[0] = [1] * n
    limbs = _LimbMatrix(M)
    b = np.zeros(n, dtype=np.int64)
    b[0] = 1
    Q = 1
    residues = None
    next_check = 4
    for used, q in enumerate(primes_below(), start=1):
        if used > max_primes:
            break
        xq = _solve_mod(limbs.mod(q), b, q)
        if xq is None:
            continue  # q divides the determinant
        xq = [int(v) for v in xq]
        if residues is None:
            residues, Q = xq, q
        else:
            inv = pow(Q, -1, q)
            residues = [r + Q * ((v - r) * inv % q) for r, v in zip(residues, xq)]
            Q *= q
        if used >= next_check:
            next_check = int(next_check * 1.25) + 1
            x = _reconstruct_vector(residues, Q)
            if x is not None and _is_left_null(P, scale, x):
                return x
    raise ArithmeticError("multi-modular solve did not converge")


def _is_left_null(P, scale, x: list[Fraction]) -> bool:
    if sum(x) != 1:
        return False
    den = 1
    for v in x:
        den = den * v.denominator // gcd(den, v.denominator)
    X = [int(v * den) for v in x]
    n = len(P)
    nz = [(r, X[r]) for r in range(n) if X[r]]
    for j in range(n):
        if sum(xr * P[r][j] for r, xr in nz) != scale * X[j]:
            return False
    return True

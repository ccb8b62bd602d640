"""Laws of move types: finite-support distributions and the geometric law."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Mapping, Union

Weight = Union[Fraction, float]

FLOAT_TOL = 1e-12
MAX_DENOMINATOR = 10**6


def as_fraction(x, max_denominator: int = MAX_DENOMINATOR) -> Fraction:
    """Exact value of ``x``; floats are rounded by continued fractions."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x).limit_denominator(max_denominator)


def parse_number(text: str) -> Weight:
    """``"1/2"`` and ``"3"`` give fractions, anything with a decimal point a float."""
    text = text.strip()
    if any(ch in text for ch in ".eE") and "/" not in text:
        return float(text)
    return Fraction(text)


@dataclass(frozen=True)
class Distribution:
    """Probability law on ``{1, ..., K}`` plus an optional atom at infinity.

    Weights are either all ``Fraction`` (exact mode) or all ``float``.
    """

    weights: Mapping[int, Weight]
    mass_at_infinity: Weight = 0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        weights = {int(k): w for k, w in self.weights.items() if w != 0}
        if not weights:
            raise ValueError("distribution has no finite support point")
        if min(weights) < 1:
            raise ValueError(f"support points must be >= 1, got {min(weights)}")
        values = list(weights.values()) + [self.mass_at_infinity]
        exact = all(isinstance(w, (int, Fraction)) for w in values)
        if exact:
            weights = {k: Fraction(w) for k, w in weights.items()}
            inf_mass = Fraction(self.mass_at_infinity)
        else:
            weights = {k: float(w) for k, w in weights.items()}
            inf_mass = float(self.mass_at_infinity)
        if any(w < 0 for w in values):
            raise ValueError("negative weight")
        total = sum(weights.values()) + inf_mass
        if exact and total != 1:
            raise ValueError(f"weights sum to {total}, not 1")
        if not exact and abs(total - 1.0) > FLOAT_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "weights", dict(sorted(weights.items())))
        object.__setattr__(self, "mass_at_infinity", inf_mass)

    @property
    def exact(self) -> bool:
        return isinstance(self.mass_at_infinity, Fraction)

    @property
    def K(self) -> int:
        return max(self.weights)

    @property
    def K0(self) -> int:
        return min(self.weights)

    @property
    def finite_mass(self) -> Weight:
        return 1 - self.mass_at_infinity

    def weight(self, k: int) -> Weight:
        return self.weights.get(k, 0 * self.mass_at_infinity)

    def cdf(self, k: int) -> Weight:
        """``mu([1, k])``."""
        zero = 0 * self.mass_at_infinity
        return sum((w for j, w in self.weights.items() if j <= k), zero)

    def vector(self) -> list:
        """Weights of ``1..K`` as a dense list."""
        return [self.weight(k) for k in range(1, self.K + 1)]

    def conditioned(self) -> "Distribution":
        """The law conditioned on a finite move, ``mu(. | . < inf)``."""
        if self.mass_at_infinity == 0:
            return self
        z = self.finite_mass
        return Distribution({k: w / z for k, w in self.weights.items()}, 0 * z,
                            label=f"{self.label}|finite")

    def to_float(self) -> "Distribution":
        if not self.exact:
            return self
        return Distribution({k: float(w) for k, w in self.weights.items()},
                            float(self.mass_at_infinity), label=self.label)

    def stochastically_below(self, other: "Distribution") -> bool:
        """``self([1,k]) <= other([1,k])`` for every k (self has larger moves)."""
        K = max(self.K, other.K)
        return all(self.cdf(k) <= other.cdf(k) for k in range(1, K + 1))


@dataclass(frozen=True)
class Geometric:
    """Geometric law ``p (1-p)^(k-1)`` on the positive integers."""

    p: Weight
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError(f"geometric parameter must lie in (0, 1], got {self.p}")
        if not self.label:
            object.__setattr__(self, "label", f"geom:{self.p}")

    @property
    def exact(self) -> bool:
        return isinstance(self.p, Fraction)

    def weight(self, k: int) -> Weight:
        return self.p * (1 - self.p) ** (k - 1)

    def cdf(self, k: int) -> Weight:
        return 1 - (1 - self.p) ** k


def delta(k: int) -> Distribution:
    return Distribution({k: Fraction(1)}, label=f"delta:{k}")


def uniform(k: int) -> Distribution:
    return Distribution({j: Fraction(1, k) for j in range(1, k + 1)}, label=f"uniform:{k}")


def truncated_geometric(p, k: int, side: str) -> Distribution:
    """Truncations of the geometric law bracketing it in the move order.

    ``side="lower"`` keeps the atoms ``1..k`` and sends the remaining mass
    ``(1-p)^k`` to infinity; ``side="upper"`` piles it onto ``k`` instead.
    """
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if k < 1:
        raise ValueError("truncation level must be >= 1")
    weights = {j: p * (1 - p) ** (j - 1) for j in range(1, k + 1)}
    rest = (1 - p) ** k
    if side == "upper":
        weights[k] += rest
        rest = 0 * rest
    if isinstance(p, float):
        # absorb rounding so the float law sums to one
        s = sum(weights.values()) + rest
        weights[1] += 1.0 - s
    return Distribution(weights, rest, label=f"geom-trunc:{p}:{k}:{side}")


def parse_distribution(spec: str) -> Union[Distribution, Geometric]:
    """Parse the distribution mini-language.

    ``delta:K``, ``uniform:K``, ``geom:p``, ``geom-trunc:p:K:upper|lower`` and
    ``table:k1=w1,k2=w2,...[,inf=w]`` with weights like ``1/3`` or ``0.25``.
    """
    kind, _, rest = spec.strip().partition(":")
    try:
        if kind == "delta":
            return delta(int(rest))
        if kind == "uniform":
            return uniform(int(rest))
        if kind == "geom":
            return Geometric(parse_number(rest))
        if kind == "geom-trunc":
            p, k, side = rest.split(":")
            return truncated_geometric(parse_number(p), int(k), side)
        if kind == "table":
            weights, inf_mass = {}, 0
            for item in rest.split(","):
                key, _, value = item.partition("=")
                w = parse_number(value)
                if key.strip() == "inf":
                    inf_mass = w
                else:
                    weights[int(key)] = w
            return Distribution(weights, inf_mass, label=spec)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad distribution spec {spec!r}: {exc}") from None
    raise ValueError(f"unknown distribution kind {kind!r} in {spec!r}")

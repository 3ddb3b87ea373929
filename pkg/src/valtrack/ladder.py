"""Price ladders, skimming weights and the continuous price range."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable

from .probability import as_fraction


class LadderError(ValueError):
    """Invalid ladder or continuous range."""


class UnknownLadderError(LadderError):
    pass


@dataclass(frozen=True)
class PriceLadder:
    """Strictly increasing positive prices r_1 < ... < r_m.

    Index 0 stands for a zero valuation and index m+1 for "reject", which is
    never given a numeric value.
    """

    prices: tuple

    def __post_init__(self):
        ps = tuple(as_fraction(p) for p in self.prices)
        if not ps:
            raise LadderError("ladder needs at least one price")
        if ps[0] <= 0:
            raise LadderError(f"prices must be positive, got {ps[0]}")
        for a, b in zip(ps, ps[1:]):
            if b <= a:
                raise LadderError(f"prices must be strictly increasing ({a} then {b})")
        object.__setattr__(self, "prices", ps)

    @property
    def m(self) -> int:
        return len(self.prices)

    @property
    def reject(self) -> int:
        return self.m + 1

    def price(self, j: int) -> Fraction:
        if not 1 <= j <= self.m:
            raise IndexError(f"price index {j} outside 1..{self.m}")
        return self.prices[j - 1]

    def value(self, i: int) -> Fraction:
        """Valuation attached to index i in 0..m."""
        if i == 0:
            return Fraction(0)
        return self.price(i)

    @cached_property
    def values(self) -> tuple:
        return (Fraction(0),) + self.prices

    @cached_property
    def float_values(self) -> tuple:
        return tuple(float(v) for v in self.values)

    @cached_property
    def weights(self) -> tuple:
        """q_j = 1 - r_{j-1}/r_j, with r_0 = 0."""
        out, prev = [], Fraction(0)
        for r in self.prices:
            out.append(1 - prev / r)
            prev = r
        return tuple(out)

    @cached_property
    def total_weight(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    @cached_property
    def competitive_ratio(self) -> Fraction:
        return 1 / self.total_weight

    @cached_property
    def cumulative_weights(self) -> tuple:
        """Q(l) = sum of q_j for j <= l, for l = 0..m."""
        out, acc = [Fraction(0)], Fraction(0)
        for w in self.weights:
            acc += w
            out.append(acc)
        return tuple(out)

    def sold_probability(self, level: int) -> Fraction:
        """Chance that a unit tracked up to `level` has been sold."""
        return self.cumulative_weights[level] / self.total_weight

    def skimming_distribution(self, floor: int = 0) -> dict:
        """Weights q_j renormalised over prices strictly above `floor`."""
        if not 0 <= floor < self.m:
            raise LadderError(f"no price above floor index {floor}")
        rest = self.weights[floor:]
        z = sum(rest, Fraction(0))
        return {j: w / z for j, w in zip(range(floor + 1, self.m + 1), rest)}

    def skim_row(self, floor: int = 0, exact: bool = True) -> tuple:
        """Decision row over indices 1..m+1 for the skimming distribution."""
        return _skim_rows(self, exact)[floor]

    def reject_row(self, exact: bool = True) -> tuple:
        return one_hot(self.m, self.m + 1, exact)

    def offer_row(self, j: int, exact: bool = True) -> tuple:
        return one_hot(self.m, j, exact)

    def __str__(self):
        return "{" + ",".join(_fmt(p) for p in self.prices) + "}"


def _fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else str(float(x))


def one_hot(m: int, j: int, exact: bool = True) -> tuple:
    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    return tuple(one if i == j else zero for i in range(1, m + 2))


_SKIM_CACHE: dict = {}


def _skim_rows(ladder: PriceLadder, exact: bool):
    key = (ladder.prices, exact)
    rows = _SKIM_CACHE.get(key)
    if rows is None:
        rows = []
        for floor in range(ladder.m):
            d = ladder.skimming_distribution(floor)
            row = [d.get(j, Fraction(0)) for j in range(1, ladder.m + 2)]
            rows.append(tuple(row) if exact else tuple(float(x) for x in row))
        _SKIM_CACHE[key] = rows
    return rows


PRESETS = {
    "1-2-4": (1, 2, 4),
    "1-2-3-4": (1, 2, 3, 4),
    "1-2": (1, 2),
    "1-to-8": tuple(range(1, 9)),
}
# finer grids on [1, 4]: steps of 1/2, 1/4, ..., 1/64
for _e in range(1, 7):
    PRESETS[f"step-{1 / 2 ** _e:g}"] = tuple(Fraction(i, 2 ** _e) for i in range(2 ** _e, 4 * 2 ** _e + 1))


def build_ladder(prices: Iterable | str) -> PriceLadder:
    """Ladder from a sequence, a comma-separated string or a preset name."""
    if isinstance(prices, PriceLadder):
        return prices
    if isinstance(prices, str):
        s = prices.strip()
        if s in PRESETS:
            return PriceLadder(PRESETS[s])
        try:
            parts = [Fraction(p.strip()) for p in s.split(",") if p.strip()]
        except (ValueError, ZeroDivisionError):
            raise UnknownLadderError(f"unknown ladder {prices!r}") from None
        return PriceLadder(tuple(parts))
    return PriceLadder(tuple(prices))


def arithmetic_ladder(low, high, step) -> PriceLadder:
    low, high, step = as_fraction(low), as_fraction(high), as_fraction(step)
    n = int((high - low) / step)
    return PriceLadder(tuple(low + i * step for i in range(n + 1)))


@dataclass(frozen=True)
class ContinuousRange:
    """Valuations on [1, R] (after normalising by the lowest price)."""

    R: float

    def __post_init__(self):
        if not (self.R >= 1 and math.isfinite(self.R)):
            raise LadderError(f"continuous range needs finite R >= 1, got {self.R}")

    @property
    def competitive_ratio(self) -> float:
        return 1.0 / (1.0 + math.log(self.R))

    def sold_probability(self, w: float) -> float:
        """Chance that a unit tracked up to level w has been sold."""
        if w < 1:
            return 0.0
        return (1.0 + math.log(w)) / (1.0 + math.log(self.R))

    def sample(self, floor: float, u: float) -> float:
        """Inverse-CDF price draw given the tracked unit's level `floor`."""
        R = self.R
        if floor < 1:
            z = 1.0 + math.log(R)
            if u * z <= 1.0:
                return 1.0
            return min(R, math.exp(u * z - 1.0))
        if floor >= R:
            return R
        return min(R, floor * (R / floor) ** u)


def sample_continuous_price(crange: ContinuousRange, floor: float, u: float) -> float:
    return crange.sample(floor, u)

"""Benchmark policies: price skimming, booking limits, myopic, conservative and DP."""
from __future__ import annotations

from ..oracles import dp_solve
from .base import TablePolicy


class PriceSkimming(TablePolicy):
    """One skimming draw at the start, then a fixed price."""

    name = "ps"

    def initial_states(self):
        d = self.ladder.skimming_distribution(0)
        return [(j, self.num(p)) for j, p in d.items()]

    def row(self, t, label, inventory):
        return self.offer(label)


class IndependentSkimming(TablePolicy):
    """A fresh skimming draw for every customer."""

    name = "ips"

    def row(self, t, label, inventory):
        return self.skim(0)


class BookingLimit(TablePolicy):
    """Posts price j while cumulative sales are below k times the skimming mass of prices up to j."""

    name = "bl"
    skimming = False

    def __init__(self, instance, exact=False):
        super().__init__(instance, exact)
        lad = self.ladder
        self.thresholds = [self.k * lad.cumulative_weights[j] / lad.total_weight
                           for j in range(1, self.m + 1)]

    def base_index(self, inventory: int) -> int:
        sales = self.k - inventory
        for j, th in enumerate(self.thresholds, start=1):
            if sales < th:
                return j
        return self.m

    def row(self, t, label, inventory):
        j = self.base_index(inventory)
        return self.skim(j - 1) if self.skimming else self.offer(j)


class BookingLimitSkimming(BookingLimit):
    """Booking-limit base price, then skimming over prices from the base upward."""

    name = "bl-ps"
    skimming = True


class Conservative(TablePolicy):
    name = "conservative"

    def row(self, t, label, inventory):
        return self.offer(self.m)


def myopic_index(ladder, survival) -> int:
    """Price maximizing immediate expected revenue; ties go to the higher price."""
    best, arg = None, ladder.m
    for j in range(ladder.m, 0, -1):
        rev = ladder.price(j) * survival[j - 1]
        if best is None or rev > best:
            best, arg = rev, j
    return arg


class Myopic(TablePolicy):
    name = "myopic"
    personalized = True

    def row(self, t, label, inventory):
        return self.offer(myopic_index(self.ladder, self.instance.survival[t]))


class DynamicProgram(TablePolicy):
    """Clairvoyant about future distributions: follows the DP argmax."""

    name = "dp"
    personalized = True

    def __init__(self, instance, exact=False):
        super().__init__(instance, exact)
        self.solution = dp_solve(instance)

    def row(self, t, label, inventory):
        return self.offer(self.solution.argmax[t][inventory])

"""Policy protocol.

A policy is bound to one instance. It is a pure state machine: the simulator
and the exact enumerator own the state, so the same object serves Monte Carlo
replications and exhaustive enumeration. A decision is a tuple of m+1
probabilities over price indices 1..m followed by "reject".
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..instances import ValuationInstance


class BrokenInvariantError(AssertionError):
    """The tracked unit reached the top price without being sold."""


@dataclass(frozen=True)
class ContinuousOffer:
    """Price to be drawn from a continuous range given the tracked level."""

    floor: float
    scale: float


class Policy:
    name = "policy"
    personalized = False
    enumerable = True

    def __init__(self, instance: ValuationInstance, exact: bool = False):
        if exact and not instance.is_exact:
            raise ValueError("exact arithmetic needs an instance with rational probabilities")
        self.instance = instance
        self.ladder = instance.ladder
        self.m = instance.m
        self.k = instance.k
        self.exact = exact
        self.one = Fraction(1) if exact else 1.0

    def num(self, x):
        return Fraction(x) if self.exact else float(x)

    def initial_states(self) -> list:
        return [(None, self.one)]

    def decide(self, state, t: int, inventory: int):
        raise NotImplementedError

    def update(self, state, t: int, price: int, valuation: int, sold: bool):
        return state

    def reseed(self, rng: np.random.Generator) -> None:
        """Hook for policies with internal randomness beyond the offered price."""

    def reject(self) -> tuple:
        return self.ladder.reject_row(self.exact)

    def offer(self, j: int) -> tuple:
        return self.ladder.offer_row(j, self.exact)

    def skim(self, floor: int = 0) -> tuple:
        return self.ladder.skim_row(floor, self.exact)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class TablePolicy(Policy):
    """Decision depends only on (t, static label, inventory).

    The label is drawn once from initial_states() and never changes. Such
    policies can be simulated for many replications at once.
    """

    def __init__(self, instance, exact=False):
        super().__init__(instance, exact)
        self._memo = {}
        self._tables = {}

    def row(self, t: int, label, inventory: int) -> tuple:
        raise NotImplementedError

    def decide(self, state, t, inventory):
        if inventory <= 0:
            return self.reject()
        key = (t, state, inventory)
        r = self._memo.get(key)
        if r is None:
            r = self._memo[key] = self.row(t, state, inventory)
        return r

    def table(self, t: int) -> np.ndarray:
        """Float decisions of shape (labels, k+1, m+1)."""
        tab = self._tables.get(t)
        if tab is None:
            labels = [s for s, _ in self.initial_states()]
            tab = np.array([[self.decide(lab, t, c) for c in range(self.k + 1)] for lab in labels],
                           dtype=float)
            self._tables[t] = tab
        return tab

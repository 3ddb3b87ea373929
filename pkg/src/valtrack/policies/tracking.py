"""Valuation tracking policies and their inventory-aware refinements."""
from __future__ import annotations

import math

import numpy as np

from ..instances import ValuationInstance
from ..ladder import ContinuousRange
from ..oracles import DEFAULT_CAP, CapExceeded
from ..probability import conditional_success, cumulative
from ..seeding import generator
from .base import BrokenInvariantError, ContinuousOffer, Policy, TablePolicy


def tracked_unit(levels) -> int:
    """Unit with the lowest level, lowest index on ties."""
    return levels.index(min(levels))


def a1_row(policy: Policy, levels, sold) -> tuple:
    i = tracked_unit(levels)
    if sold[i]:
        return policy.reject()
    if levels[i] >= policy.m:
        raise BrokenInvariantError(f"unit {i} tracked at the top price but unsold")
    return policy.skim(levels[i])


class ValuationTracking(Policy):
    """Tracks per-unit levels and sold flags; offers skimming prices above the tracked level."""

    name = "vt"

    def initial_states(self):
        return [(((0,) * self.k, (False,) * self.k), self.one)]

    def decide(self, state, t, inventory):
        levels, sold = state
        return a1_row(self, levels, sold)

    def update(self, state, t, price, valuation, sold):
        levels, flags = state
        i = tracked_unit(levels)
        if valuation > levels[i]:
            levels = levels[:i] + (valuation,) + levels[i + 1:]
        if sold:
            flags = flags[:i] + (True,) + flags[i + 1:]
        return levels, flags


class ConditionedTracking(Policy):
    """Tracks levels only and rejects with the chance the tracked unit is sold given inventory.

    With max_price=True the rejection mass is moved to the highest price instead.
    """

    name = "vt-cond"

    def __init__(self, instance, exact=False, max_price=False):
        super().__init__(instance, exact)
        self.max_price = max_price
        if max_price:
            self.name = "vt-max"
        q = self.ladder.total_weight
        self._sold_p = [self.num(self.ladder.cumulative_weights[l] / q) for l in range(self.m + 1)]
        self._memo = {}

    def initial_states(self):
        return [((0,) * self.k, self.one)]

    def gamma(self, levels, inventory):
        """Pr[tracked unit sold | inventory]; None if the inventory level is unreachable."""
        i = tracked_unit(levels)
        probs = [self._sold_p[l] for l in levels]
        return conditional_success(probs, i, self.k - inventory, self.one)

    def decide(self, state, t, inventory):
        if inventory <= 0:
            return self.reject()
        floor = min(state)
        counts = [0] * (self.m + 1)
        for l in state:
            counts[l] += 1
        key = (floor, tuple(counts), inventory)
        row = self._memo.get(key)
        if row is None:
            row = self._memo[key] = self._row(state, inventory)
        return row

    def _row(self, levels, inventory):
        g = self.gamma(levels, inventory)
        m = self.m
        if g is None:
            base = self.reject()
        elif g == 1:
            base = self.reject()
        else:
            floor = min(levels)
            if floor >= m:
                raise BrokenInvariantError("tracked unit at the top price but possibly unsold")
            skim = self.skim(floor)
            base = tuple((1 - g) * x for x in skim[:m]) + (g,)
        if self.max_price:
            base = base[:m - 1] + (base[m - 1] + base[m], 0 * base[m])
        return base

    def update(self, state, t, price, valuation, sold):
        i = tracked_unit(state)
        if valuation > state[i]:
            return state[:i] + (valuation,) + state[i + 1:]
        return state


class A1Runs:
    """Many independent tracking runs advanced together with numpy."""

    def __init__(self, instance: ValuationInstance, n: int):
        self.instance = instance
        self.k, self.m = instance.k, instance.m
        self.levels = np.zeros((n, self.k), dtype=np.int64)
        self.sold = np.zeros((n, self.k), dtype=bool)
        ladder = instance.ladder
        rows = [ladder.skim_row(f, exact=False) for f in range(self.m)] + [ladder.reject_row(False)]
        self._rows = np.array(rows)
        self._cum = cumulative(self._rows)
        self._ar = np.arange(n)

    @property
    def inventory(self):
        return self.k - self.sold.sum(axis=1)

    def _tracked(self):
        i = np.argmin(self.levels, axis=1)
        floor = self.levels[self._ar, i]
        done = self.sold[self._ar, i]
        if np.any((floor >= self.m) & ~done):
            raise BrokenInvariantError("tracked unit at the top price but unsold")
        return i, np.where(done, self.m, floor)

    def rows(self) -> np.ndarray:
        _, key = self._tracked()
        return self._rows[key]

    def step(self, t: int, u_price: np.ndarray, u_val: np.ndarray):
        i, key = self._tracked()
        price = (self._cum[key] <= u_price[:, None]).sum(axis=1) + 1
        val = np.searchsorted(self.instance.valuation_cdf[t], u_val, side="right")
        sale = (price <= self.m) & (val >= price)
        cur = self.levels[self._ar, i]
        self.levels[self._ar, i] = np.maximum(cur, val)
        self.sold[self._ar, i] |= sale


def simulate_a1_runs(instance, n: int, t: int, rng) -> A1Runs:
    runs = A1Runs(instance, n)
    for s in range(t):
        u = rng.random((2, n))
        runs.step(s, u[0], u[1])
    return runs


class ExpectedTracking(TablePolicy):
    """Price law of tracking conditional on inventory, from the exact law of its state.

    The state law uses only the distributions of customers already seen.
    """

    name = "vt-exp"

    def __init__(self, instance, exact=False, cap: int = DEFAULT_CAP, max_price=False):
        super().__init__(instance, exact)
        self.cap = cap
        self.max_price = max_price
        self._dist = {(((0,) * self.k), ((False,) * self.k)): self.one}
        self._at = 0
        self._rows_by_t = []
        self._work = 0

    def _advance(self):
        t = self._at
        rows, mass = {}, {}
        new = {}
        support = self.instance.support(t)
        for (levels, sold), p in self._dist.items():
            r = a1_row(self, levels, sold)
            inv = self.k - sum(sold)
            acc = rows.setdefault(inv, [0 * self.one] * (self.m + 1))
            for pos, x in enumerate(r):
                acc[pos] += p * x
            mass[inv] = mass.get(inv, 0 * self.one) + p
            i = tracked_unit(levels)
            for pos, x in enumerate(r):
                if x == 0:
                    continue
                j = pos + 1
                for v, vp in support:
                    self._work += 1
                    if self._work > self.cap:
                        raise CapExceeded(f"state enumeration exceeded cap {self.cap}")
                    lv = levels if v <= levels[i] else levels[:i] + (v,) + levels[i + 1:]
                    sd = sold
                    if j <= self.m and v >= j:
                        sd = sold[:i] + (True,) + sold[i + 1:]
                    key = (lv, sd)
                    new[key] = new.get(key, 0 * self.one) + p * x * vp
        self._rows_by_t.append({inv: tuple(a / mass[inv] for a in acc) for inv, acc in rows.items()})
        self._dist = new
        self._at += 1

    def row(self, t, label, inventory):
        while self._at <= t:
            self._advance()
        r = self._rows_by_t[t].get(inventory)
        if r is None:
            r = self.reject()
        if self.max_price:
            m = self.m
            r = r[:m - 1] + (r[m - 1] + r[m], 0 * r[m])
        return r


class EstimatedTracking(TablePolicy):
    """Tracking's price law given inventory, estimated from a pool of simulated runs.

    Rows with no pooled run at the current inventory reject, or post the top
    price when max_price is set.
    """

    name = "vt-est"

    def __init__(self, instance, exact=False, samples: int = 1000, seed=0, max_price=True):
        super().__init__(instance, False)
        self.samples = samples
        self.seed = seed
        self.max_price = max_price
        self._est = None

    def _estimate(self):
        inst, k, m = self.instance, self.k, self.m
        rng = generator(self.seed)
        runs = A1Runs(inst, self.samples)
        est = np.zeros((inst.T, k + 1, m + 1))
        for t in range(inst.T):
            rows, inv = runs.rows(), runs.inventory
            sums = np.zeros((k + 1, m + 1))
            np.add.at(sums, inv, rows)
            counts = np.bincount(inv, minlength=k + 1)
            empty = counts == 0
            est[t] = sums / np.maximum(counts, 1)[:, None]
            est[t][empty] = 0.0
            est[t][empty, m] = 1.0
            u = rng.random((2, self.samples))
            runs.step(t, u[0], u[1])
        self._est = est

    def row(self, t, label, inventory):
        if self._est is None:
            self._estimate()
        r = [float(x) for x in self._est[t, inventory]]
        if self.max_price:
            r[self.m - 1] += r[self.m]
            r[self.m] = 0.0
        return tuple(r)


def samp_constant(epsilon: float) -> int:
    return math.ceil(6 / (math.e * math.pi ** 2 * epsilon))


class SampledTracking(Policy):
    """Resamples tracking runs until one matches the current inventory.

    Each customer gets a budget of C(k+1)t^2 runs (t counted from 1); the first
    matching run's decision is used, otherwise the customer is rejected.
    """

    name = "vt-samp"
    enumerable = False

    def __init__(self, instance, exact=False, epsilon: float = 0.05):
        super().__init__(instance, False)
        c_star = float(self.ladder.competitive_ratio)
        if not 0 < epsilon < c_star:
            raise ValueError(f"epsilon must lie in (0, {c_star:g})")
        self.epsilon = epsilon
        self.C = samp_constant(epsilon)
        self.rng = np.random.default_rng(0)

    def reseed(self, rng):
        self.rng = rng

    def budget(self, t: int) -> int:
        return self.C * (self.k + 1) * (t + 1) ** 2

    def decide(self, state, t, inventory):
        if inventory <= 0:
            return self.reject()
        left, chunk = self.budget(t), 32
        while left > 0:
            n = min(chunk, left)
            runs = simulate_a1_runs(self.instance, n, t, self.rng)
            hit = np.flatnonzero(runs.inventory == inventory)
            if hit.size:
                return tuple(float(x) for x in runs.rows()[hit[0]])
            left -= n
            chunk *= 2
        return self.reject()


class ContinuousTracking(Policy):
    """Tracking over the continuous range [r_1, r_m], prices drawn by inverse CDF."""

    name = "vt-cont"
    enumerable = False

    def __init__(self, instance, exact=False):
        super().__init__(instance, False)
        lo, hi = self.ladder.prices[0], self.ladder.prices[-1]
        self.scale = float(lo)
        self.range = ContinuousRange(float(hi / lo))
        self._vals = [float(v) / self.scale for v in self.ladder.values]

    def initial_states(self):
        return [(((0.0,) * self.k, (False,) * self.k), 1.0)]

    def decide(self, state, t, inventory):
        levels, sold = state
        i = tracked_unit(levels)
        if sold[i] or inventory <= 0:
            return self.reject()
        return ContinuousOffer(levels[i], self.scale)

    def update(self, state, t, price, valuation, sold):
        levels, flags = state
        i = tracked_unit(levels)
        v = self._vals[valuation] if isinstance(valuation, (int, np.integer)) else valuation / self.scale
        if v > levels[i]:
            levels = levels[:i] + (v,) + levels[i + 1:]
        if sold:
            flags = flags[:i] + (True,) + flags[i + 1:]
        return levels, flags

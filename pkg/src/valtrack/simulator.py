"""Monte Carlo evaluation of policies.

Every replication consumes two streams: one uniform per customer for the
valuations (shared by all policies, so comparisons use common random
numbers) and, per policy, one uniform for the initial state followed by one
per customer for the offered price. Policies with extra internal randomness
get a third, separate stream. The vectorized path for table policies consumes
the same uniforms as run_once and reproduces it exactly.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .instances import ValuationInstance
from .oracles import FeasibilityError
from .policies.base import ContinuousOffer, Policy, TablePolicy
from .probability import cumulative, pick
from .seeding import child, generator, stream_seed


@dataclass
class Step:
    t: int
    inventory: int
    price: object
    valuation: int
    sold: bool


@dataclass
class RunResult:
    revenue: float
    sales: int
    valuations: list
    trace: list | None = None


def valuation_stream(master: int, key: Sequence, rep: int):
    return stream_seed(master, "valuations", *key, rep)


def policy_stream(master: int, key: Sequence, policy: str, rep: int):
    return stream_seed(master, "policy", *key, policy, rep)


def _seq(seed, *parts):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return stream_seed(int(seed), *parts)


def valuation_uniforms(instance, seed) -> np.ndarray:
    return generator(_seq(seed, "valuations")).random(instance.T)


def policy_uniforms(instance, seed) -> np.ndarray:
    return generator(child(seed, 0)).random(instance.T + 1)


def _initial(policy: Policy, u: float):
    states = policy.initial_states()
    if len(states) == 1:
        return 0, states[0][0]
    cum = cumulative([float(p) for _, p in states])
    i = pick(cum, u)
    return i, states[i][0]


def run_once(instance: ValuationInstance, policy: Policy, seed, *, policy_seed=None,
             record: bool = False) -> RunResult:
    """One replication of `policy` on `instance`.

    `seed` drives the valuations; the policy stream defaults to one derived from
    the same seed and the policy name.
    """
    vseed = _seq(seed, "valuations")
    pseed = policy_seed if policy_seed is not None else _seq(seed, "policy", policy.name)
    if not isinstance(pseed, np.random.SeedSequence):
        pseed = stream_seed(int(pseed), "policy", policy.name)
    vals = instance.sample_valuations(valuation_uniforms(instance, vseed))
    up = policy_uniforms(instance, pseed)
    policy.reseed(generator(child(pseed, 1)))
    return _run(instance, policy, vals, up, record)


_CUM_CACHE: dict = {}


def _row_cumulative(row) -> list:
    c = _CUM_CACHE.get(row)
    if c is None:
        if len(_CUM_CACHE) > 100_000:
            _CUM_CACHE.clear()
        c = _CUM_CACHE[row] = cumulative(row).tolist()
    return c


def _run(instance, policy, vals, up, record=False) -> RunResult:
    ladder, m = instance.ladder, instance.m
    fvals = ladder.float_values
    _, state = _initial(policy, up[0])
    inv, revenue, sales = instance.k, 0.0, 0
    trace = [] if record else None
    for t in range(instance.T):
        d = policy.decide(state, t, inv)
        v = int(vals[t])
        if isinstance(d, ContinuousOffer):
            price = d.scale * policy.range.sample(d.floor, up[t + 1])
            sold = fvals[v] >= price
            value, index = price, price
        else:
            j = bisect.bisect_right(_row_cumulative(d), up[t + 1]) + 1
            sold = j <= m and v >= j
            value, index = (fvals[j] if j <= m else 0.0), j
        if sold and inv <= 0:
            raise FeasibilityError(f"policy {policy.name} sold at t={t} with no inventory; "
                                   f"trace so far: {trace}")
        if record:
            trace.append(Step(t, inv, index, v, bool(sold)))
        if sold:
            revenue += value
            sales += 1
            inv -= 1
        state = policy.update(state, t, index, v, bool(sold))
    return RunResult(revenue, sales, [int(x) for x in vals], trace)


def simulate(instance: ValuationInstance, policy: Policy, vseeds: Sequence, pseeds: Sequence,
             valuations: np.ndarray | None = None):
    """Revenue and sales per replication; vectorized for table policies."""
    R = len(pseeds)
    if valuations is None:
        valuations = np.stack([instance.sample_valuations(valuation_uniforms(instance, s))
                               for s in vseeds])
    up = np.stack([policy_uniforms(instance, s) for s in pseeds])
    if isinstance(policy, TablePolicy):
        return _simulate_table(instance, policy, valuations, up)
    rev, sales = np.zeros(R), np.zeros(R, dtype=np.int64)
    for r in range(R):
        policy.reseed(generator(child(pseeds[r], 1)))
        res = _run(instance, policy, valuations[r], up[r])
        rev[r], sales[r] = res.revenue, res.sales
    return rev, sales


def _simulate_table(instance, policy: TablePolicy, vals, up):
    R, m = vals.shape[0], instance.m
    states = policy.initial_states()
    if len(states) == 1:
        label = np.zeros(R, dtype=np.int64)
    else:
        label = pick(cumulative([float(p) for _, p in states])[None, :].repeat(R, 0), up[:, 0])
    price_vals = np.array(list(instance.ladder.float_values[1:]) + [0.0])
    inv = np.full(R, instance.k, dtype=np.int64)
    rev, sales = np.zeros(R), np.zeros(R, dtype=np.int64)
    for t in range(instance.T):
        cum = cumulative(policy.table(t))[label, inv]
        j = pick(cum, up[:, t + 1]) + 1
        sold = (j <= m) & (vals[:, t] >= j)
        if np.any(sold & (inv <= 0)):
            raise FeasibilityError(f"policy {policy.name} sold at t={t} with no inventory")
        rev += np.where(sold, price_vals[j - 1], 0.0)
        sales += sold
        inv -= sold
    return rev, sales

"""Clairvoyant benchmarks and exact evaluators for small instances."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .instances import ValuationInstance
from .probability import poisson_binomial_pmf
from .seeding import generator, stream_seed

DEFAULT_CAP = 10**6


class CapExceeded(RuntimeError):
    """Exhaustive enumeration would exceed the configured cap."""


class FeasibilityError(AssertionError):
    """A policy offered a price with no inventory left."""


def offline_opt(k: int, valuations: Sequence, ladder=None):
    """Sum of the k largest valuations. With a ladder, valuations are indices."""
    if k < 0:
        raise ValueError("inventory must be nonnegative")
    vals = [ladder.value(i) for i in valuations] if ladder is not None else list(valuations)
    if not vals:
        return 0
    return sum(sorted(vals, reverse=True)[:k])


@dataclass
class OptEstimate:
    mean: float
    se: float
    replications: int
    exact: Fraction | None = None


def opt_samples(instance: ValuationInstance, uniforms: np.ndarray) -> np.ndarray:
    """Offline optimum for each row of a (R, T) uniform matrix."""
    idx = instance.sample_valuations(uniforms)
    vals = np.asarray(instance.ladder.float_values)[idx]
    k = instance.k
    if k >= instance.T:
        return vals.sum(axis=1)
    top = -np.partition(-vals, k - 1, axis=1)[:, :k]
    return top.sum(axis=1)


def expected_opt(instance: ValuationInstance, replications: int = 1000, seed: int = 0,
                 method: str = "mc", cap: int = DEFAULT_CAP) -> OptEstimate:
    """E[OPT] by Monte Carlo ("mc"), full enumeration ("exact") or layer-cake ("layered")."""
    if method == "exact":
        v = expected_opt_exact(instance, cap)
        return OptEstimate(float(v), 0.0, 0, v)
    if method == "layered":
        v = expected_opt_layered(instance)
        return OptEstimate(float(v), 0.0, 0, v if isinstance(v, Fraction) else None)
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    if instance.is_deterministic:
        v = offline_opt(instance.k, instance.valuations(), instance.ladder)
        return OptEstimate(float(v), 0.0, replications, Fraction(v))
    rng = generator(stream_seed(seed, "opt", *instance.key))
    samples = opt_samples(instance, rng.random((replications, instance.T)))
    se = float(samples.std(ddof=1) / math.sqrt(replications)) if replications > 1 else 0.0
    return OptEstimate(float(samples.mean()), se, replications)


def expected_opt_exact(instance: ValuationInstance, cap: int = DEFAULT_CAP):
    supports = [instance.support(t) for t in range(instance.T)]
    size = math.prod(len(s) for s in supports)
    if size > cap:
        raise CapExceeded(f"{size} valuation realizations exceed cap {cap}")
    ladder, total = instance.ladder, 0
    for combo in itertools.product(*supports):
        p = math.prod((x for _, x in combo), start=Fraction(1) if instance.is_exact else 1.0)
        total += p * offline_opt(instance.k, [i for i, _ in combo], ladder)
    return total


def expected_opt_layered(instance: ValuationInstance):
    """sum_j (r_j - r_{j-1}) E[min(k, N_j)], N_j = #customers valuing at least r_j."""
    one = Fraction(1) if instance.is_exact else 1.0
    total, prev = 0 * one, Fraction(0)
    for j, r in enumerate(instance.ladder.prices):
        pmf = poisson_binomial_pmf([s[j] for s in instance.survival], one)
        e = sum((p * min(n, instance.k) for n, p in enumerate(pmf)), 0 * one)
        step = (r - prev) if instance.is_exact else float(r - prev)
        total += step * e
        prev = r
    return total


@dataclass
class DpTable:
    value: list
    argmax: list

    @property
    def optimum(self):
        return self.value[0][-1]


def dp_solve(instance: ValuationInstance) -> DpTable:
    """Full-information dynamic program over (customers served, inventory).

    value[t][c] is the best expected revenue from customers t..T-1 with c units.
    argmax[t][c] is a price index in 1..m, or m+1 for reject; ties go to the higher index.
    """
    T, k, m = instance.T, instance.k, instance.m
    exact = instance.is_exact
    zero = Fraction(0) if exact else 0.0
    prices = instance.ladder.prices if exact else [float(r) for r in instance.ladder.prices]
    value = [[zero] * (k + 1) for _ in range(T + 1)]
    argmax = [[m + 1] * (k + 1) for _ in range(T)]
    for t in range(T - 1, -1, -1):
        s, nxt = instance.survival[t], value[t + 1]
        value[t][0] = nxt[0]
        for c in range(1, k + 1):
            best, arg = zero, m + 1
            for j in range(m, 0, -1):
                gain = s[j - 1] * (prices[j - 1] + nxt[c - 1] - nxt[c])
                if gain > best:
                    best, arg = gain, j
            value[t][c] = nxt[c] + best
            argmax[t][c] = arg
    return DpTable(value, argmax)


def dlp_value(instance: ValuationInstance):
    """Fluid relaxation optimum, solved exactly through its one-dimensional dual.

    The dual is min over lam >= 0 of k*lam + sum_t max(0, max_j (r_j - lam) s_tj),
    a convex piecewise-linear function minimized at one of its breakpoints.
    """
    exact = instance.is_exact
    prices = list(instance.ladder.prices) if exact else [float(r) for r in instance.ladder.prices]
    zero = Fraction(0) if exact else 0.0
    surv = instance.survival
    cands = {zero, prices[-1]}
    for s in surv:
        for j, (r, sj) in enumerate(zip(prices, s)):
            if sj > 0:
                cands.add(r)
            for r2, s2 in zip(prices[j + 1:], s[j + 1:]):
                if sj != s2:
                    lam = (r * sj - r2 * s2) / (sj - s2)
                    if zero <= lam <= prices[-1]:
                        cands.add(lam)

    def dual(lam):
        return instance.k * lam + sum(max(zero, max((r - lam) * sj for r, sj in zip(prices, s)))
                                      for s in surv)

    return min(dual(lam) for lam in cands)


@dataclass
class ExactEvaluation:
    revenue: object
    inventory: list
    price_given_inventory: list
    sale_probability: list
    states: list = field(default_factory=list)
    expansions: int = 0

    @property
    def expected_sales(self):
        return sum(self.sale_probability)


def exact_policy_revenue(instance: ValuationInstance, policy, cap: int = DEFAULT_CAP,
                         record_states: bool = False) -> ExactEvaluation:
    """Expected revenue by propagating the joint law of (policy state, inventory).

    Also returns the inventory law after each customer, the price law given
    inventory before each customer and the per-customer sale probability.
    """
    if not getattr(policy, "enumerable", True):
        raise ValueError(f"policy {policy.name} draws internal randomness and cannot be enumerated")
    ladder, m, k = instance.ladder, instance.m, instance.k
    one = Fraction(1) if (instance.is_exact and policy.exact) else 1.0
    prices = ladder.prices if isinstance(one, Fraction) else [float(r) for r in ladder.prices]
    dist = {}
    for state, p in policy.initial_states():
        dist[(state, k)] = dist.get((state, k), 0 * one) + p * one
    revenue = 0 * one
    inventory = [{k: one}]
    price_given, sale_prob, history = [], [], []
    expansions = 0
    for t in range(instance.T):
        if record_states:
            history.append(dict(dist))
        support = instance.support(t)
        new, cond, mass = {}, {}, {}
        sold_here = 0 * one
        for (state, inv), p in dist.items():
            row = policy.decide(state, t, inv)
            if not isinstance(row, tuple):
                raise TypeError(f"policy {policy.name} does not emit ladder decisions")
            if inv == 0 and any(x != 0 for x in row[:m]):
                raise FeasibilityError(f"policy {policy.name} offered a price at t={t} with no inventory")
            acc = cond.setdefault(inv, [0 * one] * (m + 1))
            for pos, x in enumerate(row):
                acc[pos] += p * x
            mass[inv] = mass.get(inv, 0 * one) + p
            for pos, x in enumerate(row):
                if x == 0:
                    continue
                j = pos + 1
                for i, vp in support:
                    expansions += 1
                    if expansions > cap:
                        raise CapExceeded(f"enumeration exceeded cap {cap}")
                    w = p * x * vp
                    sold = j <= m and i >= j
                    if sold:
                        revenue += w * prices[j - 1]
                        sold_here += w
                    nxt = (policy.update(state, t, j, i, sold), inv - sold)
                    new[nxt] = new.get(nxt, 0 * one) + w
        price_given.append({inv: tuple(a / mass[inv] for a in acc) for inv, acc in cond.items()})
        sale_prob.append(sold_here)
        dist = new
        marg = {}
        for (_, inv), p in dist.items():
            marg[inv] = marg.get(inv, 0 * one) + p
        inventory.append(marg)
    if record_states:
        history.append(dict(dist))
    return ExactEvaluation(revenue, inventory, price_given, sale_prob, history, expansions)

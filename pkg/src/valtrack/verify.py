"""Enumeration-backed invariant suites.

Each suite returns a SuiteResult with the number of checks made and the first
few failures. The default family is every deterministic valuation sequence
with T <= 5 on a few small ladders (m <= 3) and k <= 3.
"""
from __future__ import annotations

import contextlib
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import ladder as ladder_mod
from .instances import ValuationInstance
from .ladder import PriceLadder
from .oracles import exact_policy_revenue, expected_opt_exact, offline_opt
from .policies import build_policy, personalize
from .policies.tracking import tracked_unit
from .seeding import generator, stream_seed

FAMILY_LADDERS = ((1,), (1, 3), (1, 2, 4), (2, 3, 5))
SUITES = ("identity", "sold-law", "inventory-law", "gamma-monotone", "dominance", "fixed-price", "continuous")


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: list = field(default_factory=list)
    n_failures: int = 0

    @property
    def passed(self) -> bool:
        return self.checks > 0 and self.n_failures == 0

    def fail(self, msg):
        self.n_failures += 1
        if len(self.failures) < 5:
            self.failures.append(msg)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        n = self.n_failures
        extra = f"; first: {self.failures[0]}" if n else ""
        return f"{verdict} {self.name}: {self.checks} checks, {n} failures{extra}"


def deterministic_family(ladders=FAMILY_LADDERS, k_max=3, T_max=5):
    for prices in ladders:
        lad = PriceLadder(prices)
        for T in range(1, T_max + 1):
            for seq in itertools.product(range(lad.m + 1), repeat=T):
                for k in range(1, k_max + 1):
                    yield ValuationInstance(lad, k, seq)


def random_stochastic_instances(n=50, seed=0, m_max=3, k_max=2, T_max=5, denominator=4):
    """Tiny instances with rational valuation distributions."""
    rng = generator(stream_seed(seed, "stochastic-family"))
    out = []
    for i in range(n):
        m = int(rng.integers(1, m_max + 1))
        prices = sorted(rng.choice(np.arange(1, 9), size=m, replace=False).tolist())
        lad = PriceLadder(tuple(prices))
        T = int(rng.integers(1, T_max + 1))
        k = int(rng.integers(1, k_max + 1))
        arrivals = []
        for _ in range(T):
            cuts = sorted(rng.integers(0, denominator + 1, size=m).tolist())
            parts = np.diff([0] + cuts + [denominator])
            arrivals.append(tuple(Fraction(int(p), denominator) for p in parts))
        out.append(ValuationInstance(lad, k, tuple(arrivals), name=f"stoch-{i}"))
    return out


@contextlib.contextmanager
def inject_fault(kind: str | None):
    """Temporarily corrupt the skimming rows (mutation check for the suites)."""
    if not kind:
        yield
        return
    if kind != "skim-off-by-one":
        raise ValueError(f"unknown fault {kind!r}")
    original = ladder_mod._skim_rows

    def broken(lad, exact):
        rows = []
        for floor in range(lad.m):
            w = list(lad.weights[floor:])
            # shift the weights by one price
            w = w[1:] + w[:1] if len(w) > 1 else w
            z = sum(w)
            row = [Fraction(0)] * floor + [x / z for x in w] + [Fraction(0)]
            rows.append(tuple(row) if exact else tuple(float(x) for x in row))
        return rows

    ladder_mod._skim_rows = broken
    ladder_mod._SKIM_CACHE.clear()
    try:
        yield
    finally:
        ladder_mod._skim_rows = original
        ladder_mod._SKIM_CACHE.clear()


def _exact(inst, name):
    return exact_policy_revenue(inst, build_policy(name, inst, exact=True))


def _opt_over_q(inst):
    return Fraction(offline_opt(inst.k, inst.valuations(), inst.ladder)) / inst.ladder.total_weight


def check_identity(family=None, policies=("vt", "ps", "vt-cond", "vt-exp")) -> SuiteResult:
    res = SuiteResult("identity")
    for inst in family or deterministic_family():
        target = _opt_over_q(inst)
        for name in policies:
            res.checks += 1
            got = _exact(inst, name).revenue
            if got != target:
                res.fail(f"{name} k={inst.k} {inst.ladder} V={inst.valuations()}: {got} != {target}")
    return res


def check_sold_law(family=None) -> SuiteResult:
    res = SuiteResult("sold-law")
    lad = PriceLadder((1, 2, 4))
    res.checks += 1
    want = [Fraction(0), Fraction(1, 2), Fraction(3, 4), Fraction(1)]
    got = [lad.sold_probability(l) for l in range(4)]
    if got != want:
        res.fail(f"{{1,2,4}} sold probabilities {got} != {want}")
    for inst in family or deterministic_family():
        pol = build_policy("vt", inst, exact=True)
        ev = exact_policy_revenue(inst, pol, record_states=True)
        for t, dist in enumerate(ev.states):
            levels = {s[0][0] for s in dist}
            if len(levels) != 1:
                res.fail(f"levels not deterministic at t={t}")
                continue
            lv = levels.pop()
            for i in range(inst.k):
                res.checks += 1
                p = sum((pr for (st, _), pr in dist.items() if st[1][i]), Fraction(0))
                if p != inst.ladder.sold_probability(lv[i]):
                    res.fail(f"k={inst.k} V={inst.valuations()} t={t} unit {i}: {p}")
    return res


def check_inventory_law(family=None) -> SuiteResult:
    res = SuiteResult("inventory-law")
    for inst in family or deterministic_family():
        a = _exact(inst, "vt").inventory
        b = _exact(inst, "vt-cond").inventory
        for t, (x, y) in enumerate(zip(a, b)):
            res.checks += 1
            if {k: v for k, v in x.items() if v} != {k: v for k, v in y.items() if v}:
                res.fail(f"k={inst.k} V={inst.valuations()} t={t}: {x} vs {y}")
    return res


def check_gamma_monotone(family=None) -> SuiteResult:
    """gamma strictly decreasing in reachable inventory when the sold chance is interior."""
    res = SuiteResult("gamma-monotone")
    for inst in family or deterministic_family():
        pol = build_policy("vt-cond", inst, exact=True)
        ev = exact_policy_revenue(inst, pol, record_states=True)
        for t in range(inst.T):
            levels = next(iter(ev.states[t]))[0]
            p_star = inst.ladder.sold_probability(levels[tracked_unit(levels)])
            if not 0 < p_star < 1:
                continue
            reach = sorted(k for k, v in ev.inventory[t].items() if v > 0 and k > 0)
            gs = [pol.gamma(levels, k) for k in reach]
            for (k1, g1), (k2, g2) in zip(zip(reach, gs), zip(reach[1:], gs[1:])):
                res.checks += 1
                if not g1 > g2:
                    res.fail(f"k={inst.k} V={inst.valuations()} t={t}: gamma({k1})={g1} <= gamma({k2})={g2}")
    return res


DOMINANCE_BASES = ("vt", "vt-cond", "vt-max", "ps", "ips", "bl", "bl-ps")


def check_dominance(family=None, bases=DOMINANCE_BASES) -> SuiteResult:
    """A1'' >= A1'; LP personalization >= base with equal per-step sale probability."""
    res = SuiteResult("dominance")
    for inst in family or deterministic_family():
        evals = {name: _exact(inst, name) for name in bases}
        res.checks += 1
        if evals["vt-max"].revenue < evals["vt-cond"].revenue:
            res.fail(f"vt-max < vt-cond on k={inst.k} V={inst.valuations()}")
        for name in bases:
            pers = exact_policy_revenue(inst, personalize(build_policy(name, inst, exact=True), "lp"))
            base = evals[name]
            res.checks += 1
            if pers.revenue < base.revenue or pers.sale_probability != base.sale_probability:
                res.fail(f"{name}+lp on k={inst.k} V={inst.valuations()}: "
                         f"{pers.revenue} vs {base.revenue}")
    return res


def check_fixed_price(family=None, stochastic=None) -> SuiteResult:
    res = SuiteResult("fixed-price")
    for inst in family or deterministic_family():
        res.checks += 1
        if _exact(inst, "ps").revenue != _opt_over_q(inst):
            res.fail(f"ps on k={inst.k} V={inst.valuations()}")
    for inst in stochastic if stochastic is not None else random_stochastic_instances(20):
        res.checks += 1
        want = expected_opt_exact(inst) / inst.ladder.total_weight
        got = _exact(inst, "ps").revenue
        if got != want:
            res.fail(f"ps on {inst.name}: {got} != {want}")
    return res


def continuous_sequences(R=4.0, n=12, T_max=6, seed=0):
    rng = generator(stream_seed(seed, "continuous-family"))
    seqs = []
    for _ in range(n):
        T = int(rng.integers(1, T_max + 1))
        v = rng.uniform(1.0, R, size=T)
        v[rng.random(T) < 0.2] = 0.0
        seqs.append(v)
    return seqs


def simulate_continuous(R: float, k: int, valuations, reps: int, seed=0, uniforms=None):
    """Revenue of continuous valuation tracking on a fixed sequence, per replication."""
    from .ladder import ContinuousRange

    crange = ContinuousRange(R)
    vals = np.asarray(valuations, dtype=float)
    T = len(vals)
    u = uniforms if uniforms is not None else generator(stream_seed(seed, "continuous")).random((reps, T))
    reps = u.shape[0]
    levels = np.zeros((reps, k))
    sold = np.zeros((reps, k), dtype=bool)
    ar = np.arange(reps)
    rev = np.zeros(reps)
    z = 1 + math.log(R)
    for t in range(T):
        i = np.argmin(levels, axis=1)
        w = levels[ar, i]
        done = sold[ar, i]
        ut = u[:, t]
        fresh = np.where(ut * z <= 1, 1.0, np.exp(np.minimum(ut * z - 1, math.log(R))))
        safe = np.maximum(w, 1.0)
        raised = np.minimum(R, safe * (R / safe) ** ut)
        price = np.where(w < 1, fresh, raised)
        sale = ~done & (vals[t] >= price)
        rev += np.where(sale, price, 0.0)
        levels[ar, i] = np.maximum(w, vals[t])
        sold[ar, i] |= sale
    return rev, crange


def check_continuous(R=4.0, k=3, reps=10_000, rel_tol=None, seed=0, sequences=None) -> SuiteResult:
    """Mean revenue vs OPT/(1+ln R): within rel_tol, or within 4 standard errors when None."""
    res = SuiteResult("continuous")
    for v in sequences if sequences is not None else continuous_sequences(R, seed=seed):
        rev, crange = simulate_continuous(R, k, v, reps, seed=seed + res.checks)
        target = float(np.sort(v)[::-1][:k].sum()) * crange.competitive_ratio
        mean = rev.mean()
        se = rev.std(ddof=1) / math.sqrt(reps)
        res.checks += 1
        ok = abs(mean - target) <= (rel_tol * target if rel_tol is not None else 4 * se + 1e-12)
        if not ok:
            res.fail(f"sequence {np.round(v, 3).tolist()}: mean {mean:.4f} vs {target:.4f}")
    return res


RUNNERS = {
    "identity": check_identity, "sold-law": check_sold_law, "inventory-law": check_inventory_law,
    "gamma-monotone": check_gamma_monotone, "dominance": check_dominance, "fixed-price": check_fixed_price,
    "continuous": check_continuous,
}


def run_suites(names, fault=None, family=None) -> list:
    out = []
    with inject_fault(fault):
        for name in names:
            fn = RUNNERS[name]
            out.append(fn() if name == "continuous" else fn(family))
    return out

"""Re-optimizing a base policy's price law against the current customer's distribution."""
from __future__ import annotations

from itertools import combinations

from .base import Policy, TablePolicy

FLOAT_SLACK = 1e-12


def _revenue(row, prices, surv):
    return sum(p * r * s for p, r, s in zip(row, prices, surv))


def _consumption(row, surv):
    return sum(p * s for p, s in zip(row, surv))


def lp_personalize(row: tuple, prices, surv) -> tuple:
    """Best price law with the same sale probability as `row`.

    Solves max sum_j r_j s_j p_j s.t. sum_j s_j p_j = c, sum_j p_j <= 1, p >= 0
    by scanning basic solutions, which use at most two prices.
    """
    m = len(prices)
    zero = 0 * row[0]
    c = _consumption(row[:m], surv)
    reject = tuple([zero] * m) + (zero + 1,)
    if c == 0:
        return reject
    best, best_rev = None, None

    def consider(cand):
        nonlocal best, best_rev
        rev = _revenue(cand[:m], prices, surv)
        if best_rev is None or rev > best_rev:
            best, best_rev = cand, rev

    for j in range(m - 1, -1, -1):
        if surv[j] > 0 and c <= surv[j]:
            p = c / surv[j]
            cand = [zero] * (m + 1)
            cand[j], cand[m] = p, 1 - p
            consider(tuple(cand))
    for a, b in combinations(range(m), 2):
        sa, sb = surv[a], surv[b]
        hi, lo = (a, b) if sa > sb else (b, a)
        if surv[hi] > c > surv[lo]:
            pa = (c - surv[lo]) / (surv[hi] - surv[lo])
            cand = [zero] * (m + 1)
            cand[hi], cand[lo] = pa, 1 - pa
            consider(tuple(cand))
    base_rev = _revenue(row[:m], prices, surv)
    if best is None or best_rev < base_rev:
        return row
    return best


def upgrade(row: tuple, prices, surv) -> tuple:
    """Moves each price's mass to the price at or above it with the highest immediate revenue."""
    m = len(prices)
    out = [0 * x for x in row]
    out[m] = row[m]
    for j in range(m):
        if row[j] == 0:
            continue
        best, arg = None, j
        for j2 in range(m - 1, j - 1, -1):
            rev = prices[j2] * surv[j2]
            if best is None or rev > best:
                best, arg = rev, j2
        out[arg] += row[j]
    return tuple(out)


TRANSFORMS = {"lp": lp_personalize, "upgrade": upgrade}


class _Personalizer:
    def _setup(self, base, mode):
        self.base = base
        self.mode = mode
        self.transform = TRANSFORMS[mode]
        lad = base.ladder
        self._prices = lad.prices if base.exact else [float(r) for r in lad.prices]

    def _apply(self, t, row):
        if not isinstance(row, tuple):
            raise TypeError("personalization needs ladder decisions")
        return self.transform(row, self._prices, self.instance.survival[t])


class PersonalizedTable(_Personalizer, TablePolicy):
    personalized = True

    def __init__(self, base: TablePolicy, mode: str = "lp", name: str | None = None):
        TablePolicy.__init__(self, base.instance, base.exact)
        self._setup(base, mode)
        self.name = name or f"{base.name}+{mode}"

    def initial_states(self):
        return self.base.initial_states()

    def row(self, t, label, inventory):
        return self._apply(t, self.base.decide(label, t, inventory))


class PersonalizedPolicy(_Personalizer, Policy):
    personalized = True

    def __init__(self, base: Policy, mode: str = "lp", name: str | None = None):
        Policy.__init__(self, base.instance, base.exact)
        self._setup(base, mode)
        self.name = name or f"{base.name}+{mode}"
        self.enumerable = base.enumerable

    def initial_states(self):
        return self.base.initial_states()

    def decide(self, state, t, inventory):
        return self._apply(t, self.base.decide(state, t, inventory))

    def update(self, state, t, price, valuation, sold):
        return self.base.update(state, t, price, valuation, sold)

    def reseed(self, rng):
        self.base.reseed(rng)


def personalize(base: Policy, mode: str = "lp", name: str | None = None) -> Policy:
    if isinstance(base, TablePolicy):
        return PersonalizedTable(base, mode, name)
    return PersonalizedPolicy(base, mode, name)

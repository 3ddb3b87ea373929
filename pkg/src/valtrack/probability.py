"""Small probability helpers shared by policies, oracles and the simulator."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np


def poisson_binomial_pmf(probs: Sequence, one=1):
    """Distribution of the number of successes among independent Bernoullis.

    Works with Fractions (exact) or floats. Returns a list of length len(probs)+1.
    """
    pmf = [one] + [one - one] * len(probs)
    for n, p in enumerate(probs, start=1):
        q = one - p
        for c in range(n, 0, -1):
            pmf[c] = pmf[c] * q + pmf[c - 1] * p
        pmf[0] = pmf[0] * q
    return pmf


def conditional_success(probs: Sequence, i: int, total: int, one=1):
    """Pr[unit i succeeded | exactly `total` successes overall].

    None when the conditioning event has probability zero.
    """
    others = poisson_binomial_pmf([p for j, p in enumerate(probs) if j != i], one)
    p = probs[i]
    hit = p * others[total - 1] if total >= 1 else 0 * p
    miss = (one - p) * others[total] if total < len(others) else 0 * p
    den = hit + miss
    if den == 0:
        return None
    return hit / den


def cumulative(rows) -> np.ndarray:
    """Float cumulative distribution along the last axis, ending exactly at 1.

    Entries from the last positive mass onward are pinned to 1.0 so that a
    uniform in [0, 1) never lands on a zero-probability outcome.
    """
    p = np.asarray(rows, dtype=float)
    c = np.cumsum(p, axis=-1)
    c = c / c[..., -1:]
    positive = p > 0
    last = p.shape[-1] - 1 - np.argmax(positive[..., ::-1], axis=-1)
    idx = np.arange(p.shape[-1])
    c[idx >= last[..., None]] = 1.0
    return c


def pick(cum: np.ndarray, u) -> np.ndarray | int:
    """Inverse-CDF draw: position of the first cumulative entry exceeding u."""
    cum = np.asarray(cum)
    if cum.ndim == 1:
        return int(np.searchsorted(cum, u, side="right"))
    return (cum <= np.asarray(u)[:, None]).sum(axis=1)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)

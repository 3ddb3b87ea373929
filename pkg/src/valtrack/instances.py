"""Demand instances: valuation sequences, log-linear grids and JSON files."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .ladder import PRESETS, LadderError, PriceLadder, UnknownLadderError, build_ladder
from .probability import as_fraction, cumulative
from .seeding import generator, stream_seed

SUM_TOLERANCE = 1e-9


class InstanceError(ValueError):
    """Invalid instance contents."""


class ProbabilityError(InstanceError):
    def __init__(self, t: int, total):
        super().__init__(f"arrival t={t}: probabilities sum to {float(total):.12g}, expected 1")
        self.t = t


class InstanceFormatError(InstanceError):
    """Malformed instance file."""


def _vector(entry, m: int, t: int) -> tuple:
    if isinstance(entry, (int, np.integer)) and not isinstance(entry, bool):
        if not 0 <= entry <= m:
            raise InstanceError(f"arrival t={t}: valuation index {entry} outside 0..{m}")
        return tuple(Fraction(int(i == entry)) for i in range(m + 1))
    vec = tuple(entry)
    if len(vec) != m + 1:
        raise InstanceError(f"arrival t={t}: expected {m + 1} probabilities, got {len(vec)}")
    vec = tuple(x if isinstance(x, float) else as_fraction(x) for x in vec)
    if any(x < 0 for x in vec):
        raise InstanceError(f"arrival t={t}: negative probability")
    total = sum(vec)
    if abs(total - 1) > SUM_TOLERANCE:
        raise ProbabilityError(t, total)
    return vec


@dataclass(frozen=True)
class ValuationInstance:
    """Starting inventory k and T customers, each a distribution over indices 0..m.

    Deterministic customers are stored as degenerate vectors.
    """

    ladder: PriceLadder
    k: int
    arrivals: tuple
    name: str = field(default="", compare=False)
    key: tuple = field(default=(), compare=False)
    sensitivities: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.ladder, PriceLadder):
            object.__setattr__(self, "ladder", build_ladder(self.ladder))
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise InstanceError(f"inventory k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if len(self.arrivals) < 1:
            raise InstanceError("an instance needs at least one customer")
        m = self.ladder.m
        vecs = tuple(_vector(a, m, t) for t, a in enumerate(self.arrivals))
        object.__setattr__(self, "arrivals", vecs)

    @classmethod
    def deterministic(cls, ladder, k: int, valuations: Sequence[int], **kw):
        return cls(build_ladder(ladder), k, tuple(int(v) for v in valuations), **kw)

    @property
    def T(self) -> int:
        return len(self.arrivals)

    @property
    def m(self) -> int:
        return self.ladder.m

    @cached_property
    def is_exact(self) -> bool:
        return all(isinstance(x, Fraction) for v in self.arrivals for x in v)

    @cached_property
    def is_deterministic(self) -> bool:
        return all(sum(1 for x in v if x != 0) == 1 for v in self.arrivals)

    def valuations(self) -> list:
        """Index sequence of a deterministic instance."""
        if not self.is_deterministic:
            raise InstanceError("instance has random valuations")
        return [next(i for i, x in enumerate(v) if x != 0) for v in self.arrivals]

    def support(self, t: int) -> list:
        return [(i, x) for i, x in enumerate(self.arrivals[t]) if x != 0]

    @cached_property
    def survival(self) -> tuple:
        """s[t][j-1] = Pr[V_t >= r_j] for j = 1..m."""
        out = []
        for v in self.arrivals:
            acc, tail = 0 * v[0], []
            for x in reversed(v[1:]):
                acc = acc + x
                tail.append(acc)
            out.append(tuple(reversed(tail)))
        return tuple(out)

    @cached_property
    def survival_array(self) -> np.ndarray:
        return np.array([[float(x) for x in s] for s in self.survival])

    @cached_property
    def valuation_cdf(self) -> np.ndarray:
        """Float cumulative valuation distribution per customer, shape (T, m+1)."""
        return cumulative(np.array([[float(x) for x in v] for v in self.arrivals]))

    def sample_valuations(self, uniforms: np.ndarray) -> np.ndarray:
        """Map uniforms of shape (..., T) to valuation indices."""
        u = np.asarray(uniforms)
        out = np.empty(u.shape, dtype=np.int64)
        cdf = self.valuation_cdf
        for t in range(self.T):
            out[..., t] = np.searchsorted(cdf[t], u[..., t], side="right")
        return out

    def prefix(self, t: int) -> "ValuationInstance":
        return ValuationInstance(self.ladder, self.k, self.arrivals[:t], name=self.name)

    def with_arrivals(self, arrivals) -> "ValuationInstance":
        return ValuationInstance(self.ladder, self.k, tuple(arrivals), name=self.name, key=self.key)


def loglinear_distribution(ladder: PriceLadder, b: float) -> tuple:
    """v_j = exp(-b r_j) - exp(-b r_{j+1}) with r_0 = 0 and r_{m+1} = infinity."""
    if not b > 0:
        raise ValueError(f"price sensitivity must be positive, got {b}")
    tails = [1.0] + [math.exp(-b * float(r)) for r in ladder.prices] + [0.0]
    return tuple(tails[j] - tails[j + 1] for j in range(ladder.m + 1))


@dataclass(frozen=True)
class ExperimentGrid:
    ladder: PriceLadder
    inventories: tuple = (10,)
    multipliers: tuple = tuple(range(1, 11))
    instances_per_length: int = 100
    b_low: float = 1 / 3
    b_high: float = 4 / 3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ladder", build_ladder(self.ladder))
        object.__setattr__(self, "inventories", tuple(int(k) for k in self.inventories))
        object.__setattr__(self, "multipliers", tuple(int(x) for x in self.multipliers))
        if not self.inventories or min(self.inventories) < 1:
            raise ValueError("inventories must be positive")
        if not self.multipliers or min(self.multipliers) < 1:
            raise ValueError("horizon multipliers must be positive")
        if self.instances_per_length < 1:
            raise ValueError("instances_per_length must be positive")
        if not 0 < self.b_low < self.b_high:
            raise ValueError("need 0 < b_low < b_high")

    def cells(self):
        for k in self.inventories:
            for mult in self.multipliers:
                yield k, mult * k

    def __len__(self):
        return len(self.inventories) * len(self.multipliers) * self.instances_per_length


def grid_instance(grid: ExperimentGrid, k: int, T: int, idx: int) -> ValuationInstance:
    rng = generator(stream_seed(grid.seed, "instance", k, T, idx))
    bs = rng.uniform(grid.b_low, grid.b_high, size=T)
    arrivals = tuple(loglinear_distribution(grid.ladder, float(b)) for b in bs)
    return ValuationInstance(grid.ladder, k, arrivals, name=f"k{k}-T{T}-{idx:04d}",
                             key=(k, T, idx), sensitivities=tuple(float(b) for b in bs))


def generate_grid(grid: ExperimentGrid) -> Iterator[ValuationInstance]:
    """Instances in canonical (k, T, index) order."""
    for k, T in grid.cells():
        for idx in range(grid.instances_per_length):
            yield grid_instance(grid, k, T, idx)


def failure_instance(eps=Fraction(1, 100)) -> ValuationInstance:
    """Ladder {1,2,4}, k = 4: two random customers then one with valuation 1."""
    eps = as_fraction(eps)
    v = (Fraction(0), Fraction(1, 2) + 2 * eps, Fraction(1, 4) - eps, Fraction(1, 4) - eps)
    return ValuationInstance(PriceLadder((1, 2, 4)), 4, (v, v, 1), name="tracking-failure")


# --- serialization -------------------------------------------------------

def decimal_string(x) -> str:
    """Exact decimal text for x; non-terminating rationals fall back to 'p/q'."""
    if isinstance(x, float):
        return format(Decimal(x), "f")
    x = as_fraction(x)
    d, e2, e5 = x.denominator, 0, 0
    while d % 2 == 0:
        d //= 2
        e2 += 1
    while d % 5 == 0:
        d //= 5
        e5 += 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    e = max(e2, e5)
    scaled = x.numerator * 10 ** e // x.denominator
    return format(Decimal(scaled).scaleb(-e), "f")


def parse_number(s) -> Fraction:
    if isinstance(s, bool):
        raise InstanceFormatError(f"not a number: {s!r}")
    if isinstance(s, (int, float)):
        return as_fraction(s)
    if not isinstance(s, str):
        raise InstanceFormatError(f"not a number: {s!r}")
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError):
        raise InstanceFormatError(f"not a number: {s!r}") from None


def instance_to_dict(instance: ValuationInstance) -> dict:
    arrivals = []
    for v in instance.arrivals:
        nz = [i for i, x in enumerate(v) if x != 0]
        if len(nz) == 1 and v[nz[0]] == 1:
            arrivals.append(nz[0])
        else:
            arrivals.append([decimal_string(x) for x in v])
    out = {"prices": [decimal_string(p) for p in instance.ladder.prices], "k": instance.k,
           "arrivals": arrivals}
    if instance.name:
        out["name"] = instance.name
    return out


def instance_from_dict(doc) -> ValuationInstance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    if "ladder" in doc and "prices" not in doc:
        name = doc["ladder"]
        if name not in PRESETS:
            raise UnknownLadderError(f"unknown ladder reference {name!r}")
        ladder = PriceLadder(PRESETS[name])
    elif "prices" in doc:
        if not isinstance(doc["prices"], list):
            raise InstanceFormatError("'prices' must be an array")
        try:
            ladder = PriceLadder(tuple(parse_number(p) for p in doc["prices"]))
        except LadderError as exc:
            raise InstanceFormatError(str(exc)) from None
    else:
        raise InstanceFormatError("missing field 'prices'")
    if "k" not in doc or "arrivals" not in doc:
        raise InstanceFormatError("missing field 'k' or 'arrivals'")
    k = doc["k"]
    if not isinstance(k, int) or isinstance(k, bool):
        raise InstanceFormatError("'k' must be an integer")
    raw = doc["arrivals"]
    if not isinstance(raw, list):
        raise InstanceFormatError("'arrivals' must be an array")
    arrivals = []
    for t, a in enumerate(raw):
        if isinstance(a, int) and not isinstance(a, bool):
            arrivals.append(a)
        elif isinstance(a, list):
            arrivals.append(tuple(parse_number(x) for x in a))
        else:
            raise InstanceFormatError(f"arrival t={t}: expected an index or a probability array")
    return ValuationInstance(ladder, k, tuple(arrivals), name=str(doc.get("name", "")))


def write_instance(instance: ValuationInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=2) + "\n")


def read_instance(path) -> ValuationInstance:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"instance not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"malformed instance file: {exc}") from None
    return instance_from_dict(doc)

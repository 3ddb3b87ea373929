"""Policy library and name registry."""
from __future__ import annotations

from .base import BrokenInvariantError, ContinuousOffer, Policy, TablePolicy
from .baselines import (BookingLimit, BookingLimitSkimming, Conservative, DynamicProgram,
                        IndependentSkimming, Myopic, PriceSkimming, myopic_index)
from .personalize import lp_personalize, personalize, upgrade
from .tracking import (A1Runs, ConditionedTracking, ContinuousTracking, EstimatedTracking,
                       ExpectedTracking, SampledTracking, ValuationTracking, samp_constant)

POLICY_IDS = (
    "vt", "vt-cond", "vt-max", "vt-exp", "vt-samp", "vt-cont", "vt-p",
    "ps", "ips", "ps-p", "ips-p", "bl", "bl-ps", "bl-p", "myopic", "conservative", "dp",
)
# full-LP personalizations and the estimated base of vt-p
EXTRA_IDS = ("vt-est", "ps-lp", "ips-lp", "bl-lp")
BENCHMARK_POLICIES = ("ps", "ips", "bl", "bl-ps", "ps-p", "ips-p", "bl-p", "vt-p", "myopic",
                   "conservative", "dp")
LABELS = {
    "ps": "PS", "ips": "IPS", "bl": "BL", "bl-ps": "BL-PS", "ps-p": "PS-P", "ips-p": "IPS-P",
    "bl-p": "BL-P", "vt-p": "Valuation Tracking", "myopic": "Myopic",
    "conservative": "Conservative", "dp": "DP",
}


class UnknownPolicyError(KeyError):
    def __str__(self):
        return f"unknown policy {self.args[0]!r}"


def build_policy(name: str, instance, *, exact: bool = False, epsilon: float = 0.05,
                 samples: int = 1000, pool_seed=0, cap: int | None = None) -> Policy:
    """Policy `name` bound to `instance`."""
    kw = {} if cap is None else {"cap": cap}
    simple = {
        "vt": ValuationTracking, "ps": PriceSkimming, "ips": IndependentSkimming,
        "bl": BookingLimit, "bl-ps": BookingLimitSkimming, "myopic": Myopic,
        "conservative": Conservative, "dp": DynamicProgram, "vt-cont": ContinuousTracking,
    }
    if name in simple:
        return simple[name](instance, exact)
    if name == "vt-cond":
        return ConditionedTracking(instance, exact)
    if name == "vt-max":
        return ConditionedTracking(instance, exact, max_price=True)
    if name == "vt-exp":
        return ExpectedTracking(instance, exact, **kw)
    if name == "vt-samp":
        return SampledTracking(instance, exact, epsilon=epsilon)
    if name in ("vt-est", "vt-p"):
        base = EstimatedTracking(instance, samples=samples, seed=pool_seed, max_price=True)
        return base if name == "vt-est" else personalize(base, "lp", "vt-p")
    if name in ("ps-p", "ips-p", "bl-p", "ps-lp", "ips-lp", "bl-lp"):
        base_name, suffix = name.rsplit("-", 1)
        base = build_policy(base_name, instance, exact=exact)
        return personalize(base, "upgrade" if suffix == "p" else "lp", name)
    raise UnknownPolicyError(name)


__all__ = [
    "POLICY_IDS", "EXTRA_IDS", "BENCHMARK_POLICIES", "LABELS", "UnknownPolicyError", "build_policy",
    "Policy", "TablePolicy", "ContinuousOffer", "BrokenInvariantError", "personalize",
    "lp_personalize", "upgrade", "myopic_index", "samp_constant", "A1Runs",
    "ValuationTracking", "ConditionedTracking", "ExpectedTracking", "EstimatedTracking",
    "SampledTracking", "ContinuousTracking", "PriceSkimming", "IndependentSkimming",
    "BookingLimit", "BookingLimitSkimming", "Conservative", "Myopic", "DynamicProgram",
]

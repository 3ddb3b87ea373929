import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from valtrack.instances import ValuationInstance, failure_instance, loglinear_distribution
from valtrack.ladder import PriceLadder
from valtrack.oracles import exact_policy_revenue, expected_opt_exact
from valtrack.policies import (EXTRA_IDS, POLICY_IDS, BrokenInvariantError, ContinuousOffer,
                               UnknownPolicyError, build_policy, lp_personalize, myopic_index,
                               personalize, samp_constant, upgrade)
from valtrack.policies.tracking import a1_row
from valtrack.seeding import generator

LAD = PriceLadder((1, 2, 4))


def det(k, seq, ladder=LAD):
    return ValuationInstance.deterministic(ladder, k, seq)


def revenue(name, inst):
    return exact_policy_revenue(inst, build_policy(name, inst, exact=True)).revenue


def walk(policy, inst, sold_flags=None):
    """States visited by a state-tracking policy along a deterministic sequence with no sales."""
    state = policy.initial_states()[0][0]
    out = []
    for t, v in enumerate(inst.valuations()):
        out.append(state)
        state = policy.update(state, t, None, v, False)
    return out


def test_registry():
    inst = det(2, [3, 1])
    for name in POLICY_IDS + EXTRA_IDS:
        assert build_policy(name, inst).name == name
    with pytest.raises(UnknownPolicyError):
        build_policy("nope", inst)


def test_single_top_valuation_revenue_is_two():
    inst = det(1, [3])
    for name in ("vt", "ps", "ips", "vt-cond", "vt-exp"):
        assert revenue(name, inst) == 2


def test_vt_walkthrough():
    inst = det(5, [3, 1, 3, 1, 2, 2])
    assert revenue("vt", inst) == F(13, 2)
    pol = build_policy("vt", inst, exact=True)
    states = walk(pol, inst)
    levels, sold = states[5]
    assert levels == (3, 1, 3, 1, 2) and levels.index(min(levels)) == 1
    assert pol.decide(states[5], 5, 5) == (0, F(1, 2), F(1, 2), 0)


def test_vt_fresh_and_sold():
    inst = det(2, [3, 3])
    pol = build_policy("vt", inst, exact=True)
    s0 = pol.initial_states()[0][0]
    assert pol.decide(s0, 0, 2) == LAD.skim_row(0)
    s1 = pol.update(s0, 0, 3, 3, True)
    s2 = pol.update(s1, 1, None, 0, False)
    # unit 0 sold at the top price; the next arrival goes to unit 1
    assert pol.decide(s1, 1, 1) == LAD.skim_row(0)
    lv, flags = s2
    assert flags == (True, False)


def test_vt_rejects_when_tracked_unit_sold():
    pol = build_policy("vt", det(1, [3, 3]), exact=True)
    state = ((3,), (True,))
    assert pol.decide(state, 1, 0) == LAD.reject_row()


def test_vt_broken_invariant():
    pol = build_policy("vt", det(1, [3]), exact=True)
    with pytest.raises(BrokenInvariantError):
        a1_row(pol, (3,), (False,))


def test_cond_gamma_zero_when_nothing_sold():
    inst = det(3, [2, 3, 0, 1])
    pol = build_policy("vt-cond", inst, exact=True)
    assert pol.gamma((2, 0, 0), 3) == 0
    assert pol.gamma((2, 1, 0), 3) == 0
    assert pol.decide((2, 1, 0), 2, 3) == LAD.skim_row(0)


def test_cond_gamma_interior_and_unreachable():
    pol = build_policy("vt-cond", det(2, [3, 1, 1]), exact=True)
    # levels (3, 1): unit 1 sold w.p. 1/2, unit 0 w.p. 1; one unit left -> unit 1 unsold
    assert pol.gamma((3, 1), 1) == 0
    assert pol.gamma((3, 1), 0) == 1
    assert pol.gamma((3, 1), 2) is None
    assert pol.decide((3, 1), 2, 2) == LAD.reject_row()


def test_max_price_moves_reject_mass():
    inst = det(2, [1, 1, 1])
    cond = build_policy("vt-cond", inst, exact=True)
    mx = build_policy("vt-max", inst, exact=True)
    # levels (1, 1), one unit left: tracked unit 0 sold w.p. 1/2 given one sale
    rc = cond.decide((1, 1), 2, 1)
    rm = mx.decide((1, 1), 2, 1)
    assert rc == (0, F(1, 4), F(1, 4), F(1, 2))
    assert rm == (0, F(1, 4), F(3, 4), 0)
    assert mx.decide((1, 1), 2, 0) == LAD.reject_row()


def test_exp_equals_conditioned_on_degenerate():
    for seq, k in [([3, 1, 3, 1, 2, 2], 3), ([1, 2, 1, 3], 2), ([2, 2, 2], 1)]:
        inst = det(k, seq)
        exp = build_policy("vt-exp", inst, exact=True)
        cond = build_policy("vt-cond", inst, exact=True)
        states = walk(cond, inst)
        ev = exact_policy_revenue(inst, cond)
        for t, lv in enumerate(states):
            for c, p in ev.inventory[t].items():
                if p > 0 and c > 0:
                    assert exp.decide(None, t, c) == cond.decide(lv, t, c)


def test_exp_matches_opt_over_q_stochastic():
    inst = failure_instance()
    assert revenue("vt-exp", inst) == expected_opt_exact(inst) / LAD.total_weight


def test_samp_constant_and_validation():
    assert samp_constant(0.05) == 5
    inst = det(1, [3])
    assert build_policy("vt-samp", inst, epsilon=0.05).C == 5
    with pytest.raises(ValueError):
        build_policy("vt-samp", inst, epsilon=0.6)
    with pytest.raises(ValueError):
        build_policy("vt-samp", inst, epsilon=0.0)


def test_samp_budget():
    pol = build_policy("vt-samp", det(3, [1, 2]), epsilon=0.05)
    assert [pol.budget(t) for t in range(3)] == [20, 80, 180]


def test_samp_equals_conditioned_on_degenerate():
    inst = det(2, [1, 2, 1, 3])
    samp = build_policy("vt-samp", inst)
    samp.reseed(generator(3))
    cond = build_policy("vt-cond", inst, exact=True)
    states = walk(cond, inst)
    ev = exact_policy_revenue(inst, cond)
    for t, lv in enumerate(states):
        for c, p in ev.inventory[t].items():
            if p > 0 and c > 0:
                got = samp.decide(None, t, c)
                want = [float(x) for x in cond.decide(lv, t, c)]
                # a matching run always exists; its row is the tracked unit's row in that run
                assert math.isclose(sum(got), 1.0)
                assert got[-1] in (0.0, 1.0)
                if want[-1] == 0:
                    assert got == tuple(want)


def test_samp_forced_case_exact():
    # all valuations top or zero: every run's row is skim(0) or reject, determined by inventory
    inst = det(2, [3, 0, 3, 3])
    samp = build_policy("vt-samp", inst)
    samp.reseed(generator(1))
    assert samp.decide(None, 0, 2) == tuple(float(x) for x in LAD.skim_row(0))


def test_continuous_unit_range_always_offers_lowest():
    inst = det(2, [1, 1, 1], PriceLadder((3,)))
    pol = build_policy("vt-cont", inst)
    s = pol.initial_states()[0][0]
    offer = pol.decide(s, 0, 2)
    assert isinstance(offer, ContinuousOffer)
    assert pol.range.sample(offer.floor, 0.99) * offer.scale == 3.0


def test_ps_draws_once():
    inst = det(2, [3, 3, 3])
    pol = build_policy("ps", inst, exact=True)
    states = dict(pol.initial_states())
    assert states == {1: F(1, 2), 2: F(1, 4), 3: F(1, 4)}
    assert pol.decide(2, 1, 2) == (0, 1, 0, 0)
    single = build_policy("ps", det(1, [1], PriceLadder((5,))), exact=True)
    assert single.initial_states() == [(1, 1)]


def test_ips_rejects_at_zero_inventory():
    pol = build_policy("ips", det(1, [3, 3]), exact=True)
    assert pol.decide(None, 1, 0) == LAD.reject_row()
    assert pol.decide(None, 1, 1) == LAD.skim_row(0)


def test_bl_thresholds():
    pol = build_policy("bl", det(4, [3]), exact=True)
    assert pol.thresholds == [2, 3, 4]
    assert [pol.base_index(4 - s) for s in range(4)] == [1, 1, 2, 3]
    one = build_policy("bl", det(1, [3]), exact=True)
    assert one.base_index(1) == 1


def test_bl_ps_after_half_sold():
    pol = build_policy("bl-ps", det(4, [3]), exact=True)
    assert pol.decide(None, 0, 4) == LAD.skim_row(0)
    assert pol.decide(None, 2, 2) == (0, F(1, 2), F(1, 2), 0)


def test_bl_ps_trace():
    # two customers valuing 4 then one valuing 1, k = 4
    assert revenue("bl-ps", det(4, [3, 3, 1])) == 4


def test_bl_p_on_failure_fixture():
    assert revenue("bl-p", failure_instance()) == 2


def test_lp_examples():
    assert lp_personalize((F(1), F(0), F(0)), (1, 2), (F(1), F(1, 2))) == (1, 0, 0)
    out = lp_personalize((F(1, 2), F(1, 2), F(0)), (1, 2), (F(1), F(1)))
    assert out == (0, 1, 0)


@st.composite
def lp_case(draw):
    m = draw(st.integers(1, 4))
    prices = sorted(draw(st.lists(st.integers(1, 20), min_size=m, max_size=m, unique=True)))
    s = sorted((draw(st.fractions(0, 1, max_denominator=8)) for _ in range(m)), reverse=True)
    w = [draw(st.integers(0, 5)) for _ in range(m + 1)]
    if sum(w) == 0:
        w[-1] = 1
    row = tuple(F(x, sum(w)) for x in w)
    return row, tuple(F(p) for p in prices), tuple(s)


@given(lp_case())
@settings(max_examples=300, deadline=None)
def test_lp_preserves_consumption_and_improves(case):
    row, prices, surv = case
    m = len(prices)
    out = lp_personalize(row, prices, surv)
    assert sum(out) == 1 and all(x >= 0 for x in out)
    cons = lambda r: sum(p * s for p, s in zip(r[:m], surv))
    rev = lambda r: sum(p * x * s for p, x, s in zip(r[:m], prices, surv))
    assert cons(out) == cons(row)
    assert rev(out) >= rev(row)
    assert sum(1 for x in out[:m] if x) <= 2


@given(lp_case())
@settings(max_examples=300, deadline=None)
def test_upgrade_moves_mass_upward(case):
    row, prices, surv = case
    m = len(prices)
    out = upgrade(row, prices, surv)
    rev = lambda r: sum(p * x * s for p, x, s in zip(r[:m], prices, surv))
    assert sum(out) == 1 and out[m] == row[m]
    assert rev(out) >= rev(row)
    cum = lambda r, j: sum(r[:j])
    assert all(cum(out, j) <= cum(row, j) for j in range(m + 1))


def test_lp_optimal_against_linprog():
    opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = int(rng.integers(1, 5))
        prices = np.sort(rng.choice(np.arange(1, 12), m, replace=False)).astype(float)
        surv = np.sort(rng.random(m))[::-1]
        row = rng.dirichlet(np.ones(m + 1))
        out = lp_personalize(tuple(row), tuple(prices), tuple(surv))
        c = float(np.dot(row[:m], surv))
        res = opt.linprog(-(prices * surv), A_ub=[np.ones(m)], b_ub=[1], A_eq=[surv], b_eq=[c],
                          bounds=(0, None), method="highs")
        assert abs(-res.fun - float(np.dot(out[:m], prices * surv))) < 1e-9


def test_personalized_policy_consumption_per_step():
    inst = failure_instance()
    for name in ("vt", "vt-cond", "ps", "bl", "bl-ps", "ips"):
        base = exact_policy_revenue(inst, build_policy(name, inst, exact=True))
        pers = exact_policy_revenue(inst, personalize(build_policy(name, inst, exact=True), "lp"))
        assert pers.sale_probability == base.sale_probability
        assert pers.revenue >= base.revenue


def test_myopic_price():
    lad = PriceLadder((1, 2, 3, 4))
    v = loglinear_distribution(lad, 1.0)
    surv = [sum(v[j:]) for j in range(1, 5)]
    assert myopic_index(lad, surv) == 1
    for j in (1, 2, 3, 4):
        inst = det(1, [j], lad)
        assert build_policy("myopic", inst, exact=True).decide(None, 0, 1) == lad.offer_row(j)


def test_conservative_short_horizon():
    inst = det(5, [3, 3, 3])
    assert revenue("conservative", inst) == 12


def test_dp_follows_argmax():
    inst = failure_instance()
    pol = build_policy("dp", inst, exact=True)
    assert exact_policy_revenue(inst, pol).revenue == pol.solution.optimum == 3


def test_zero_inventory_rejects_everywhere():
    inst = failure_instance()
    for name in ("vt-exp", "vt-est", "vt-p", "ps", "ips", "bl", "bl-ps", "bl-p", "ps-p", "ips-p",
                 "myopic", "conservative", "dp", "vt-max"):
        pol = build_policy(name, inst)
        state = pol.initial_states()[0][0]
        assert pol.decide(state, 1, 0)[-1] == 1


def test_non_anticipation():
    lad = PriceLadder((1, 2, 3, 4))
    head = tuple(loglinear_distribution(lad, b) for b in (0.4, 1.0, 0.7))
    a = ValuationInstance(lad, 2, head + (loglinear_distribution(lad, 0.5),) * 2)
    b = ValuationInstance(lad, 2, head + (loglinear_distribution(lad, 1.3),) * 3)
    for name in ("vt-exp", "vt-est", "vt-p", "ps", "ips", "bl", "bl-ps", "bl-p", "ps-p", "myopic",
                 "conservative"):
        pa, pb = build_policy(name, a), build_policy(name, b)
        for t in range(3):
            assert np.array_equal(pa.table(t), pb.table(t)), (name, t)

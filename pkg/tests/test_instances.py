import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

from valtrack.instances import (ExperimentGrid, InstanceError, InstanceFormatError, ProbabilityError,
                                ValuationInstance, failure_instance, decimal_string, generate_grid,
                                grid_instance, loglinear_distribution, read_instance, write_instance)
from valtrack.ladder import PriceLadder, UnknownLadderError


def test_loglinear_ln2():
    v = loglinear_distribution(PriceLadder((1, 2, 4)), math.log(2))
    assert np.allclose(v, (1 / 2, 1 / 4, 3 / 16, 1 / 16), atol=1e-15)


def test_loglinear_sums_to_one_and_large_b():
    lad = PriceLadder((1, 2, 3, 4))
    for b in (0.01, 0.5, 1.2, 7.0):
        assert math.isclose(sum(loglinear_distribution(lad, b)), 1.0, abs_tol=1e-15)
    assert loglinear_distribution(lad, 60.0)[0] > 1 - 1e-12
    with pytest.raises(ValueError):
        loglinear_distribution(lad, 0)


def test_deterministic_entries_are_degenerate():
    inst = ValuationInstance.deterministic((1, 2, 4), 2, [3, 0, 1])
    assert inst.arrivals[0] == (0, 0, 0, 1)
    assert inst.is_deterministic and inst.is_exact
    assert inst.valuations() == [3, 0, 1]
    assert inst.survival[2] == (1, 0, 0)


def test_validation_errors():
    lad = PriceLadder((1, 2, 4))
    with pytest.raises(ProbabilityError) as exc:
        ValuationInstance(lad, 1, (1, (F(1, 2), F(3, 10), 0, 0)))
    assert exc.value.t == 1 and "t=1" in str(exc.value)
    with pytest.raises(InstanceError):
        ValuationInstance(lad, 0, (1,))
    with pytest.raises(InstanceError):
        ValuationInstance(lad, 1, ())
    with pytest.raises(InstanceError):
        ValuationInstance(lad, 1, (4,))
    with pytest.raises(InstanceError):
        ValuationInstance(lad, 1, ((1, 0, 0),))


def test_grid_counts_and_determinism():
    g = ExperimentGrid((1, 2, 3, 4), (10,), tuple(range(1, 11)), 3, seed=7)
    insts = list(generate_grid(g))
    assert len(insts) == len(g) == 30
    assert {i.T for i in insts} == set(range(10, 101, 10))
    again = list(generate_grid(g))
    assert all(a == b and a.sensitivities == b.sensitivities for a, b in zip(insts, again))
    other = grid_instance(ExperimentGrid((1, 2, 3, 4), seed=8), 10, 10, 0)
    assert other != insts[0]


def test_full_scale_grid_size():
    assert len(ExperimentGrid((1, 2, 3, 4), (10,), tuple(range(1, 11)), 1000)) == 10_000


def test_single_cell_grid():
    g = ExperimentGrid((1, 2), (3,), (2,), 1)
    (inst,) = list(generate_grid(g))
    assert inst.T == 6 and inst.k == 3


def test_grid_validation():
    with pytest.raises(ValueError):
        ExperimentGrid((1, 2), b_low=1.0, b_high=0.5)
    with pytest.raises(ValueError):
        ExperimentGrid((1, 2), instances_per_length=0)


def test_grid_survival_matches_mixture():
    lad = PriceLadder((1, 2, 3, 4))
    g = ExperimentGrid(lad, (10,), (1000,), 1, seed=3)
    inst = next(iter(generate_grid(g)))
    emp = inst.survival_array.mean(axis=0)
    lo, hi = g.b_low, g.b_high
    for j, r in enumerate(lad.prices):
        r = float(r)
        analytic = (math.exp(-lo * r) - math.exp(-hi * r)) / (r * (hi - lo))
        assert abs(emp[j] - analytic) < 0.01


def test_failure_fixture():
    inst = failure_instance()
    assert inst.k == 4 and inst.T == 3
    assert inst.arrivals[0] == (0, F(52, 100), F(24, 100), F(24, 100))
    assert inst.arrivals[2] == (0, 1, 0, 0)


def test_round_trip(tmp_path):
    for inst in [failure_instance(), ValuationInstance.deterministic((1, F(3, 2), 4), 2, [2, 0]),
                 grid_instance(ExperimentGrid((1, 2, 3, 4)), 10, 10, 0),
                 ValuationInstance((1, 2), 1, ((F(1, 3), F(1, 3), F(1, 3)),))]:
        path = tmp_path / "inst.json"
        write_instance(inst, path)
        back = read_instance(path)
        assert back == inst


def test_decimal_strings():
    assert decimal_string(F(1, 4)) == "0.25"
    assert decimal_string(F(52, 100)) == "0.52"
    assert decimal_string(F(3)) == "3"
    assert decimal_string(F(1, 3)) == "1/3"
    assert F(decimal_string(0.1)) == F(0.1)


def test_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_instance(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InstanceFormatError):
        read_instance(bad)
    bad.write_text(json.dumps({"prices": ["1", "2"], "k": 1, "arrivals": [["0.5", "0.2", "0.1"]]}))
    with pytest.raises(ProbabilityError) as exc:
        read_instance(bad)
    assert exc.value.t == 0
    bad.write_text(json.dumps({"ladder": "nope", "k": 1, "arrivals": [0]}))
    with pytest.raises(UnknownLadderError):
        read_instance(bad)
    bad.write_text(json.dumps({"ladder": "1-2-4", "k": 1, "arrivals": [3]}))
    assert read_instance(bad).ladder == PriceLadder((1, 2, 4))
    bad.write_text(json.dumps({"prices": ["1"], "k": "x", "arrivals": [0]}))
    with pytest.raises(InstanceFormatError):
        read_instance(bad)


def test_failure_fixture_file_parses(tmp_path):
    doc = {"prices": ["1", "2", "4"], "k": 4,
           "arrivals": [["0", "0.52", "0.24", "0.24"], ["0", "0.52", "0.24", "0.24"], 1]}
    p = tmp_path / "a.json"
    p.write_text(json.dumps(doc))
    assert read_instance(p) == failure_instance()

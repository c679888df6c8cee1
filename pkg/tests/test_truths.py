from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import oracle_agrees

from lgga.dataset import DataPoint, Dataset, generated
from lgga.expr import parse
from lgga.truths import (
    GuardedValue,
    OutputBoundedByInputs,
    Range,
    Reflection,
    SignAgreement,
    Symmetry,
    TruthProgram,
    TruthSyntaxError,
    ZeroCondition,
    generate_counterexamples,
    parse_truth,
    parse_truths,
    truth_error,
    truths_to_dsl,
    violation,
)

R = ("r1", "r2")


def P(text, names=R):
    return parse(text, names)


def test_worked_example():
    ds = Dataset.from_arrays(R, [[12, 0], [800, 0]], [0, 0])
    [t] = parse_truth("zero(r2)", R)
    cand = P("r1 + r2")
    assert [violation(t, cand, p) for p in ds] == [12.0, 800.0]
    assert truth_error([t], cand, ds) == 800.0


def test_symmetry_counterexample():
    [t] = parse_truth("sym(r1, r2)", R)
    found = generate_counterexamples(t, P("r1 - r2"), DataPoint((2.0, 3.0), 4.0))
    assert [(p.inputs, p.label) for p in found] == [((3.0, 2.0), 4.0)]
    assert found[0].provenance == generated(t.id, 0)
    assert generate_counterexamples(t, P("r1 + r2"), DataPoint((2.0, 3.0), 4.0)) == []


def test_sz_expands_to_two_truths():
    ts = parse_truth("sz(r1, r2)", R)
    assert [type(t) for t in ts] == [Symmetry, ZeroCondition]
    assert [t.id for t in ts] == ["sym(r1;r2)", "zero(r1;r2)"]


def test_zero_condition_derivation():
    [t] = parse_truth("zero(r1, r2)", R)
    found = generate_counterexamples(t, P("r1 + r2"), DataPoint((2.0, 3.0), 1.2))
    assert sorted((p.inputs, p.label) for p in found) == [((0.0, 3.0), 0.0), ((2.0, 0.0), 0.0)]


def test_zero_condition_skips_the_all_zero_corner():
    # from (4, 0) zeroing r1 would reach (0, 0), where r1 r2 / (r1 + r2) is 0/0
    [t] = parse_truth("zero(r1, r2)", R)
    truth = P("r1 * r2 / (r1 + r2)")
    assert violation(t, truth, (4.0, 0.0)) == 0.0
    found = generate_counterexamples(t, P("r1 + r2"), DataPoint((4.0, 0.0), 0.0))
    assert [p.inputs for p in found] == [(4.0, 0.0)]


def test_reflection():
    [t] = parse_truth("sym(x, -x)", ["x"])
    assert isinstance(t, Reflection)
    assert violation(t, parse("x", ["x"]), (2.0,)) == 4.0
    assert violation(t, parse("square(x)", ["x"]), (2.0,)) == 0.0
    [p] = generate_counterexamples(t, parse("x", ["x"]), DataPoint((2.0,), 0.7))
    assert p.inputs == (-2.0,) and p.label == 0.7


def test_guarded_value_constants_and_aliases():
    names = ["x1", "x2", "y1", "y2"]
    [t] = parse_truth("guard(x2=x1, y1=0, y2=y1 -> square(x1))", names)
    assert isinstance(t, GuardedValue)
    dot = parse("x1 * y1 + x2 * y2", names)
    # constants first: y1 = 0, then aliases: x2 = x1, y2 = y1 = 0
    assert violation(t, dot, (3.0, 9.0, 5.0, 7.0)) == 9.0
    [p] = generate_counterexamples(t, dot, DataPoint((3.0, 9.0, 5.0, 7.0), 1.0))
    assert p.inputs == (3.0, 3.0, 0.0, 0.0) and p.label == 9.0


def test_inverse_swap():
    names = ["i", "r"]
    [t] = parse_truth("inv_swap(i, r)", names)
    snell = parse("sin(i) / sin(r)", names)
    assert violation(t, snell, (0.3, 0.9)) == pytest.approx(0.0, abs=1e-15)
    assert violation(t, parse("i + r", names), (1.0, 2.0)) == pytest.approx(8.0)
    # guarded: a near-zero side makes the check vacuous
    assert violation(t, parse("i - i", names), (1.0, 2.0)) == 0.0
    [p] = generate_counterexamples(t, parse("i + r", names), DataPoint((1.0, 2.0), 4.0))
    assert p.inputs == (2.0, 1.0) and p.label == 0.25


def test_range_and_bounds_are_loss_only():
    [rng_t] = parse_truth("range(0, 1)", R)
    assert isinstance(rng_t, Range) and not rng_t.generative
    assert violation(rng_t, P("r1"), (1.5, 0.0)) == 0.5
    assert violation(rng_t, P("r1"), (-0.25, 0.0)) == 0.25
    assert violation(rng_t, P("r1"), (0.5, 0.0)) == 0.0
    [le] = parse_truth("out_le_min(r1, r2)", R)
    assert isinstance(le, OutputBoundedByInputs)
    assert violation(le, P("r1 + r2"), (2.0, 3.0)) == 3.0
    assert violation(le, P("r1 * r2 / (r1 + r2)"), (2.0, 3.0)) == 0.0
    [sa] = parse_truth("sign_agree(r1, r2)", R)
    assert isinstance(sa, SignAgreement)
    assert violation(sa, P("r1 - r2"), (2.0, 3.0)) == 1.0
    assert violation(sa, P("r1 * r2"), (-2.0, 1.0)) == 0.0
    assert generate_counterexamples(sa, P("r1 + r2"), DataPoint((-2.0, 1.0), -2.0)) == []


def test_parse_errors_carry_line_numbers():
    with pytest.raises(TruthSyntaxError) as info:
        parse_truths("sz(r1, r2)\n# note\nbogus(r1)\n", R)
    assert info.value.line == 3 and "line 3" in str(info.value)
    for bad in ("sym(r1)", "zero(q)", "range(2, 1)", "guard(r1=0 r2)", "inv_swap(r1, r1)", "sym r1"):
        with pytest.raises(TruthSyntaxError):
            parse_truth(bad, R)
    with pytest.raises(TruthSyntaxError):
        parse_truths("sym(r1, r2)\nsym(r1, r2)", R)


def test_dsl_round_trip():
    names = ["a", "b", "c"]
    text = ("sym(a, b)\nzero(c)\nrange[0, 1)\nout_le_min(a, b)\nsign_agree(a, c)\n"
            "inv_swap(a, b)\nguard(a=1, b=a -> c + 2.5)\n")
    ts = parse_truths(text, names)
    again = parse_truths(truths_to_dsl(ts, names), names)
    assert [t.id for t in again] == [t.id for t in ts]


def test_empty_inputs():
    ds = Dataset.from_arrays(R, [[1, 2]], [0.5])
    assert truth_error([], P("r1"), ds) == 0.0
    with pytest.raises(ValueError):
        truth_error(parse_truth("zero(r1)", R), P("r1"), Dataset(R))


def test_program_matches_point_api():
    rng = np.random.default_rng(0)
    ts = parse_truths("sz(r1, r2)\nout_le_min(r1, r2)\nrange(0, 3)", R)
    X = rng.uniform(0, 4, (30, 2))
    X[:5, 1] = 0.0
    cand = P("r1 + 0.5 * r2")
    prog = TruthProgram(ts, X)
    for t, vs in zip(ts, prog.violations(cand)):
        assert vs.tolist() == [violation(t, cand, x) for x in X]


def test_counterexamples_are_ordered_and_tagged():
    ts = parse_truths("sz(r1, r2)", R)
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    prog = TruthProgram(ts, X, np.array([0.7, 1.7]))
    found = prog.counterexamples(P("r1 - r2 + 1"), generation=5)
    assert [p.inputs for p in found] == [
        (2.0, 1.0), (0.0, 2.0), (1.0, 0.0), (4.0, 3.0), (0.0, 4.0), (3.0, 0.0),
    ]
    assert {str(p.provenance) for p in found} == {"gen:sym(r1;r2):5", "gen:zero(r1;r2):5"}


@settings(max_examples=1000, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8))
def test_truth_error_matches_brute_force(seed, n):
    assert oracle_agrees(seed, n)

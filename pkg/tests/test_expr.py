from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lgga.expr import (
    BIG,
    Alphabet,
    ArityError,
    Binary,
    Const,
    InputShapeError,
    ParseError,
    Unary,
    UnknownIdentifierError,
    Var,
    VariationConfig,
    check_expr,
    complexity,
    crossover,
    depth,
    evaluate,
    evaluate_batch,
    evaluate_checked,
    mutate,
    parse,
    ramped_half_and_half,
    random_expr,
    replace,
    semantically_equivalent,
    subtree,
    to_text,
    walk,
)
from lgga.expr.nodes import BINARY_OPS, UNARY_OPS

NAMES = ("r1", "r2")
FULL = Alphabet(("a", "b", "c"), UNARY_OPS, BINARY_OPS, (-2.0, 2.0))


def P(text, names=NAMES):
    return parse(text, names)


# nodes ----------------------------------------------------------------------


def test_node_validation():
    with pytest.raises(ValueError):
        Var(-1)
    with pytest.raises(ValueError):
        Const(math.inf)
    with pytest.raises(ValueError):
        Unary("tan", Var(0))
    with pytest.raises(ValueError):
        Binary("mod", Var(0), Var(1))


def test_depth_and_complexity():
    e = P("r1 * r2 / (r1 + r2)")
    assert depth(Var(0)) == 0
    assert depth(e) == 2
    assert complexity(e) == 7


def test_walk_is_prefix_order_with_paths():
    e = P("sin(r1) + r2")
    nodes = list(walk(e))
    assert [p for p, _, _ in nodes] == [(), (0,), (0, 0), (1,)]
    assert [lv for _, _, lv in nodes] == [0, 1, 2, 1]
    for path, node, _ in nodes:
        assert subtree(e, path) is node


def test_replace_builds_new_tree():
    e = P("r1 + r2")
    out = replace(e, (1,), Const(3.0))
    assert to_text(out, NAMES) == "r1 + 3.0"
    assert to_text(e, NAMES) == "r1 + r2"


def test_alphabet_validation():
    with pytest.raises(ValueError):
        Alphabet(("x", "x"))
    with pytest.raises(ValueError):
        Alphabet(("sin",))
    with pytest.raises(ValueError):
        Alphabet(("x",), ("tan",))
    a = Alphabet(("x", "y"), ("sin",), ("add",), None)
    assert a.arity == 2 and a.n_terminals == 2 and a.n_functions == 2
    assert Alphabet.from_dict(a.to_dict()) == a


def test_check_expr():
    check_expr(P("r1 + r2"), arity=2, max_depth=1)
    with pytest.raises(ValueError):
        check_expr(P("r1 + r2"), arity=1)
    with pytest.raises(ValueError):
        check_expr(P("r1 * (r1 + r2)"), arity=2, max_depth=1)


# evaluation -----------------------------------------------------------------


def test_evaluate_basic():
    assert evaluate(P("r1 * r2 / (r1 + r2)"), (2.0, 2.0)) == 1.0
    assert evaluate(P("r1 + r2"), (12.0, 0.0)) == 12.0


@pytest.mark.parametrize(
    "text, inputs, expected, clean",
    [
        ("r1 / r2", (1.0, 0.0), 1.0, False),
        ("r2 / r2", (1.0, 0.0), 1.0, False),
        ("log(r1)", (0.0, 0.0), 0.0, False),
        ("log(r1)", (-math.e, 0.0), 1.0, True),
        ("sqrt(r1)", (-4.0, 0.0), 2.0, True),
        ("r1 ^ r2", (0.0, -1.0), 1.0, False),
        ("r1 ^ r2", (-8.0, 0.5), 1.0, False),
        ("r1 ^ r2", (2.0, 3.0), 8.0, True),
        ("exp(r1)", (1000.0, 0.0), BIG, False),
        ("neg(exp(r1))", (1000.0, 0.0), -BIG, False),
        ("r1 ^ r2", (10.0, 400.0), BIG, False),
        ("abs(r1)", (-3.0, 0.0), 3.0, True),
        ("square(r1)", (-3.0, 0.0), 9.0, True),
    ],
)
def test_protected_operators(text, inputs, expected, clean):
    value, ok = evaluate_checked(P(text), inputs)
    assert value == pytest.approx(expected, rel=1e-12)
    assert ok is clean


def test_evaluate_batch_shapes():
    e = P("r1 + 1")
    X = np.array([[1.0, 0.0], [2.0, 0.0]])
    out = evaluate_batch(e, X)
    assert out.values.tolist() == [2.0, 3.0]
    assert out.clean.all()
    # a constant broadcasts to one value per row
    assert evaluate_batch(Const(2.5), X).values.tolist() == [2.5, 2.5]
    with pytest.raises(InputShapeError):
        evaluate_batch(e, np.ones(3))
    with pytest.raises(InputShapeError):
        evaluate_batch(P("r2"), np.ones((2, 1)))
    with pytest.raises(InputShapeError):
        evaluate(e, (1.0,), arity=2)


def test_clean_mask_is_per_row():
    out = evaluate_batch(P("r1 / r2"), np.array([[1.0, 2.0], [1.0, 0.0]]))
    assert out.values.tolist() == [0.5, 1.0]
    assert out.clean.tolist() == [True, False]


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_evaluation_is_total(seed):
    rng = np.random.default_rng(seed)
    e = random_expr(FULL, (0, 6), "grow", rng)
    X = rng.uniform(-1e3, 1e3, size=(20, 3))
    X[0] = 0.0
    v = evaluate_batch(e, X).values
    assert np.isfinite(v).all()


def test_semantic_equivalence():
    rng = np.random.default_rng(0)
    ranges = [(1.0, 5.0), (1.0, 5.0)]
    a = P("r1 * r2 / (r1 + r2)")
    assert semantically_equivalent(a, P("1 / (1 / r1 + 1 / r2)"), ranges, rng)
    assert semantically_equivalent(a, P("r2 * r1 / (r2 + r1)"), ranges, rng)
    assert not semantically_equivalent(a, P("r1 + r2"), ranges, rng)
    assert not semantically_equivalent(a, P("r1 * r2 / (r1 + r2) + 1e-3"), ranges, rng)
    with pytest.raises(ValueError):
        semantically_equivalent(a, a, [(1.0, 1.0), (1.0, 5.0)], rng)


# text -----------------------------------------------------------------------


def test_to_text_example():
    assert to_text(Binary("mul", Var(0), Var(1)), NAMES) == "r1 * r2"
    assert to_text(Binary("mul", Var(0), Var(1))) == "x0 * x1"


@pytest.mark.parametrize(
    "text, expected",
    [
        ("r1 - (r2 - r1)", "r1 - (r2 - r1)"),
        ("(r1 - r2) - r1", "r1 - r2 - r1"),
        ("r1 / (r2 * r1)", "r1 / (r2 * r1)"),
        ("r1 ^ r2 ^ 2", "r1 ^ r2 ^ 2.0"),
        ("(r1 ^ r2) ^ 2", "(r1 ^ r2) ^ 2.0"),
        ("-r1", "neg(r1)"),
        ("-2 * r1", "(-2.0) * r1"),
        ("log(r1) + sqrt(r2)", "log(r1) + sqrt(r2)"),
        ("pow(r1, 2)", "r1 ^ 2.0"),
        ("pdiv(r1, r2)", "r1 / r2"),
    ],
)
def test_parse_and_print(text, expected):
    assert to_text(P(text), NAMES) == expected


def test_unary_minus_binds_looser_than_power():
    # -r1^2 is neg(r1^2), as in ordinary notation
    assert evaluate(P("-r1 ^ 2"), (3.0, 0.0)) == -9.0


def test_parse_error_positions():
    with pytest.raises(ParseError) as info:
        P("r1 +")
    assert info.value.token == 3
    with pytest.raises(ParseError):
        P("r1 r2")
    with pytest.raises(ParseError):
        P("(r1 + r2")
    with pytest.raises(UnknownIdentifierError):
        P("r1 + q")
    with pytest.raises(ArityError):
        P("sin(r1, r2)")


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_print_parse_round_trip(seed):
    rng = np.random.default_rng(seed)
    e = random_expr(FULL, (0, 6), "grow", rng)
    names = FULL.var_names
    assert parse(to_text(e, names), names) == e


# variation ------------------------------------------------------------------


def test_random_expr_depths():
    rng = np.random.default_rng(1)
    for _ in range(100):
        e = random_expr(FULL, (2, 4), "full", rng)
        assert 2 <= depth(e) <= 4
        g = random_expr(FULL, (0, 4), "grow", rng)
        assert depth(g) <= 4
    with pytest.raises(ValueError):
        random_expr(FULL, (3, 2), "grow", rng)
    with pytest.raises(ValueError):
        random_expr(FULL, (1, 2), "half", rng)


def test_full_trees_have_every_leaf_at_target_depth():
    rng = np.random.default_rng(2)
    e = random_expr(FULL, (3, 3), "full", rng)
    leaf_levels = {lv for _, n, lv in walk(e) if type(n) in (Var, Const)}
    assert leaf_levels == {3}


def test_ramped_half_and_half_size_and_determinism():
    a = ramped_half_and_half(FULL, 50, (2, 6), np.random.default_rng(3))
    b = ramped_half_and_half(FULL, 50, (2, 6), np.random.default_rng(3))
    assert len(a) == 50 and a == b


def test_constants_respect_range_and_can_be_disabled():
    rng = np.random.default_rng(4)
    no_consts = Alphabet(("a",), (), ("add",), None)
    for e in ramped_half_and_half(no_consts, 30, (1, 4), rng):
        assert all(type(n) is not Const for _, n, _ in walk(e))
    for e in ramped_half_and_half(FULL, 30, (1, 4), rng):
        assert all(-2.0 <= n.value <= 2.0 for _, n, _ in walk(e) if type(n) is Const)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), max_depth=st.integers(2, 8))
def test_variation_respects_depth_limit(seed, max_depth):
    rng = np.random.default_rng(seed)
    cfg = VariationConfig(max_depth=max_depth)
    a = random_expr(FULL, (0, max_depth), "grow", rng)
    b = random_expr(FULL, (0, max_depth), "full", rng)
    for child in crossover(a, b, rng, cfg) + (mutate(a, FULL, rng, cfg),):
        check_expr(child, arity=FULL.arity, max_depth=max_depth)


def test_crossover_swaps_material_between_parents():
    rng = np.random.default_rng(5)
    a, b = P("r1 + r1"), P("r2 * r2")
    changed = 0
    for _ in range(20):
        ca, cb = crossover(a, b, rng)
        changed += ca != a or cb != b
        assert complexity(ca) + complexity(cb) == complexity(a) + complexity(b)
    assert changed > 0


def test_mutation_kinds():
    alpha = Alphabet(NAMES, ("sin", "cos"), ("add", "mul"), (-1.0, 1.0))
    e = P("r1 + 0.5")
    rng = np.random.default_rng(6)
    only_const = VariationConfig(mutation_weights=(0.0, 0.0, 1.0))
    out = mutate(e, alpha, rng, only_const)
    assert type(out.right) is Const and out.right.value != 0.5 and out.left == e.left
    only_point = VariationConfig(mutation_weights=(0.0, 1.0, 0.0))
    seen = {to_text(mutate(e, alpha, rng, only_point), NAMES) for _ in range(30)}
    assert "r1 * 0.5" in seen
    # constant mutation on a constant-free tree falls back to subtree replacement
    out = mutate(P("r1 + r2"), alpha, rng, only_const)
    check_expr(out, arity=2, max_depth=17)

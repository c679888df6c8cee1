"""Random tree construction and the genetic operators that act on trees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nodes import Alphabet, Binary, Const, Expr, Unary, Var, depth, replace, walk

MUTATION_KINDS = ("subtree", "point", "constant")


@dataclass(frozen=True)
class VariationConfig:
    max_depth: int = 17
    mutation_weights: tuple = (0.5, 0.3, 0.2)
    constant_sigma: float = 0.1
    mutation_subtree_depth: int = 2
    internal_node_bias: float = 0.9


def _terminal(alphabet: Alphabet, rng: np.random.Generator) -> Expr:
    k = int(rng.integers(alphabet.n_terminals))
    if k < alphabet.arity:
        return Var(k)
    lo, hi = alphabet.const_range
    return Const(float(rng.uniform(lo, hi)))


def _function(alphabet: Alphabet, rng: np.random.Generator):
    k = int(rng.integers(alphabet.n_functions))
    nu = len(alphabet.unary_ops)
    if k < nu:
        return 1, alphabet.unary_ops[k]
    return 2, alphabet.binary_ops[k - nu]


def random_expr(
    alphabet: Alphabet,
    depth_range: tuple,
    method: str,
    rng: np.random.Generator,
) -> Expr:
    """Build a random tree of depth drawn uniformly from ``depth_range``.

    ``full`` puts every leaf at exactly that depth. ``grow`` forces
    functions above ``depth_range[0]`` and below that picks a terminal with
    probability ``n_terminals / (n_terminals + n_functions)``.
    """
    lo, hi = depth_range
    if not 0 <= lo <= hi:
        raise ValueError(f"bad depth range {depth_range}")
    if method not in ("full", "grow"):
        raise ValueError(f"unknown init method {method!r}")
    target = int(rng.integers(lo, hi + 1))
    if alphabet.n_functions == 0:
        return _terminal(alphabet, rng)
    p_term = alphabet.n_terminals / (alphabet.n_terminals + alphabet.n_functions)

    def build(level: int) -> Expr:
        if level >= target:
            leaf = True
        elif method == "full" or level < lo:
            leaf = False
        else:
            leaf = rng.random() < p_term
        if leaf:
            return _terminal(alphabet, rng)
        arity, op = _function(alphabet, rng)
        if arity == 1:
            return Unary(op, build(level + 1))
        left = build(level + 1)
        return Binary(op, left, build(level + 1))

    return build(0)


def ramped_half_and_half(alphabet: Alphabet, n: int, depth_range: tuple, rng: np.random.Generator) -> list:
    return [
        random_expr(alphabet, depth_range, "full" if i % 2 == 0 else "grow", rng)
        for i in range(n)
    ]


def _pick_node(nodes: list, rng: np.random.Generator, internal_bias: float):
    internal = [n for n in nodes if type(n[1]) in (Unary, Binary)]
    if internal and len(internal) < len(nodes):
        if rng.random() < internal_bias:
            return internal[int(rng.integers(len(internal)))]
        leaves = [n for n in nodes if type(n[1]) in (Var, Const)]
        return leaves[int(rng.integers(len(leaves)))]
    return nodes[int(rng.integers(len(nodes)))]


def _subtree_mutation(e, alphabet, rng, cfg):
    nodes = list(walk(e))
    path, _, level = nodes[int(rng.integers(len(nodes)))]
    room = max(0, min(cfg.mutation_subtree_depth, cfg.max_depth - level))
    return replace(e, path, random_expr(alphabet, (0, room), "grow", rng))


def _point_mutation(e, alphabet, rng, cfg):
    nodes = list(walk(e))
    path, node, _ = nodes[int(rng.integers(len(nodes)))]
    t = type(node)
    if t is Unary:
        others = [op for op in alphabet.unary_ops if op != node.op]
        if not others:
            return None
        new = Unary(others[int(rng.integers(len(others)))], node.child)
    elif t is Binary:
        others = [op for op in alphabet.binary_ops if op != node.op]
        if not others:
            return None
        new = Binary(others[int(rng.integers(len(others)))], node.left, node.right)
    else:
        new = _terminal(alphabet, rng)
        if new == node:
            return None
    return replace(e, path, new)


def _constant_mutation(e, rng, cfg):
    consts = [(p, n) for p, n, _ in walk(e) if type(n) is Const]
    if not consts:
        return None
    path, node = consts[int(rng.integers(len(consts)))]
    return replace(e, path, Const(node.value + float(rng.normal(0.0, cfg.constant_sigma))))


def mutate(expr: Expr, alphabet: Alphabet, rng: np.random.Generator, config=None) -> Expr:
    """Apply one mutation chosen by ``config.mutation_weights``.

    Kinds are subtree replacement, point (operator/terminal) swap and
    gaussian constant perturbation. A kind that cannot apply to this tree
    falls back to subtree replacement; a result deeper than
    ``config.max_depth`` is discarded in favour of the input.
    """
    cfg = config or VariationConfig()
    w = np.asarray(cfg.mutation_weights, dtype=float)
    kind = MUTATION_KINDS[int(rng.choice(len(w), p=w / w.sum()))]
    out = None
    if kind == "point":
        out = _point_mutation(expr, alphabet, rng, cfg)
    elif kind == "constant":
        out = _constant_mutation(expr, rng, cfg)
    if out is None:
        out = _subtree_mutation(expr, alphabet, rng, cfg)
    if depth(out) > cfg.max_depth:
        return expr
    return out


def crossover(a: Expr, b: Expr, rng: np.random.Generator, config=None) -> tuple:
    """Exchange one random subtree between ``a`` and ``b``.

    Internal nodes are chosen with probability ``internal_node_bias``.
    An offspring deeper than ``max_depth`` is replaced by its parent.
    """
    cfg = config or VariationConfig()
    bias = getattr(cfg, "internal_node_bias", 0.9)
    pa, sa, _ = _pick_node(list(walk(a)), rng, bias)
    pb, sb, _ = _pick_node(list(walk(b)), rng, bias)
    ca = replace(a, pa, sb)
    cb = replace(b, pb, sa)
    if depth(ca) > cfg.max_depth:
        ca = a
    if depth(cb) > cfg.max_depth:
        cb = b
    return ca, cb

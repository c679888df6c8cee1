"""Immutable expression trees and the symbol alphabet they are built from."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

UNARY_OPS = ("neg", "sin", "cos", "exp", "plog", "psqrt", "abs", "square")
BINARY_OPS = ("add", "sub", "mul", "pdiv", "pow")

DEFAULT_UNARY = ("sin", "cos", "exp", "plog", "psqrt", "abs", "square")
DEFAULT_BINARY = ("add", "sub", "mul", "pdiv", "pow")

# Function names of the infix grammar; variables may not use them.
RESERVED_NAMES = frozenset(
    {"neg", "sin", "cos", "exp", "log", "plog", "sqrt", "psqrt", "abs", "square", "pow", "pdiv"}
)


@dataclass(frozen=True, slots=True)
class Var:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"variable index must be >= 0, got {self.index}")


@dataclass(frozen=True, slots=True)
class Const:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"constant must be finite, got {self.value!r}")


@dataclass(frozen=True, slots=True)
class Unary:
    op: str
    child: "Expr"

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary op {self.op!r}")


@dataclass(frozen=True, slots=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op!r}")


Expr = Union[Var, Const, Unary, Binary]

# A path addresses a subtree: the sequence of child slots (0 = left/only, 1 = right).
Path = tuple


def children(e: Expr) -> tuple:
    t = type(e)
    if t is Binary:
        return (e.left, e.right)
    if t is Unary:
        return (e.child,)
    return ()


def depth(e: Expr) -> int:
    """Depth of the tree; a single leaf has depth 0."""
    t = type(e)
    if t is Binary:
        return 1 + max(depth(e.left), depth(e.right))
    if t is Unary:
        return 1 + depth(e.child)
    return 0


def complexity(e: Expr) -> int:
    """Number of nodes (operations, variables and constants)."""
    t = type(e)
    if t is Binary:
        return 1 + complexity(e.left) + complexity(e.right)
    if t is Unary:
        return 1 + complexity(e.child)
    return 1


def max_var_index(e: Expr) -> int:
    """Largest variable index referenced, or -1 for a variable-free tree."""
    t = type(e)
    if t is Var:
        return e.index
    if t is Const:
        return -1
    return max(max_var_index(c) for c in children(e))


def walk(e: Expr, path: Path = (), level: int = 0) -> Iterator[tuple]:
    """Yield ``(path, node, level)`` for every node in prefix order."""
    stack = [(path, e, level)]
    while stack:
        p, node, lv = stack.pop()
        yield p, node, lv
        t = type(node)
        if t is Binary:
            stack.append((p + (1,), node.right, lv + 1))
            stack.append((p + (0,), node.left, lv + 1))
        elif t is Unary:
            stack.append((p + (0,), node.child, lv + 1))


def subtree(e: Expr, path: Path) -> Expr:
    for i in path:
        e = children(e)[i]
    return e


def replace(e: Expr, path: Path, new: Expr) -> Expr:
    """Return a copy of ``e`` with the subtree at ``path`` swapped for ``new``."""
    if not path:
        return new
    head, rest = path[0], path[1:]
    if type(e) is Binary:
        if head == 0:
            return Binary(e.op, replace(e.left, rest, new), e.right)
        return Binary(e.op, e.left, replace(e.right, rest, new))
    if type(e) is Unary:
        return Unary(e.op, replace(e.child, rest, new))
    raise IndexError("path descends past a leaf")


@dataclass(frozen=True)
class Alphabet:
    """Symbols available to the search.

    ``const_range`` is ``None`` when ephemeral constants are disabled,
    otherwise the ``(lo, hi)`` interval constants are drawn from.
    """

    var_names: tuple
    unary_ops: tuple = DEFAULT_UNARY
    binary_ops: tuple = DEFAULT_BINARY
    const_range: tuple | None = (-1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "var_names", tuple(self.var_names))
        object.__setattr__(self, "unary_ops", tuple(self.unary_ops))
        object.__setattr__(self, "binary_ops", tuple(self.binary_ops))
        if not self.var_names:
            raise ValueError("alphabet needs at least one variable")
        if len(set(self.var_names)) != len(self.var_names):
            raise ValueError(f"variable names must be distinct: {self.var_names}")
        for name in self.var_names:
            if not name.isidentifier() or name in RESERVED_NAMES:
                raise ValueError(f"invalid variable name {name!r}")
        for op in self.unary_ops:
            if op not in UNARY_OPS:
                raise ValueError(f"unknown unary op {op!r}")
        for op in self.binary_ops:
            if op not in BINARY_OPS:
                raise ValueError(f"unknown binary op {op!r}")
        if self.const_range is not None:
            lo, hi = self.const_range
            if not lo < hi:
                raise ValueError(f"constant range needs lo < hi, got {self.const_range}")
            object.__setattr__(self, "const_range", (float(lo), float(hi)))

    @property
    def arity(self) -> int:
        return len(self.var_names)

    @property
    def n_terminals(self) -> int:
        return self.arity + (1 if self.const_range is not None else 0)

    @property
    def n_functions(self) -> int:
        return len(self.unary_ops) + len(self.binary_ops)

    def index_of(self, name: str) -> int:
        try:
            return self.var_names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}; expected one of {list(self.var_names)}") from None

    def with_ops(self, unary=None, binary=None) -> "Alphabet":
        return Alphabet(
            self.var_names,
            self.unary_ops if unary is None else tuple(unary),
            self.binary_ops if binary is None else tuple(binary),
            self.const_range,
        )

    def to_dict(self) -> dict:
        return {
            "var_names": list(self.var_names),
            "unary_ops": list(self.unary_ops),
            "binary_ops": list(self.binary_ops),
            "const_range": None if self.const_range is None else list(self.const_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Alphabet":
        cr = d.get("const_range", (-1.0, 1.0))
        return cls(
            tuple(d["var_names"]),
            tuple(d.get("unary_ops", DEFAULT_UNARY)),
            tuple(d.get("binary_ops", DEFAULT_BINARY)),
            None if cr is None else tuple(cr),
        )


def check_expr(e: Expr, arity: int, max_depth: int | None = None) -> None:
    """Raise ``ValueError`` if ``e`` breaks the arity or depth bound."""
    if max_var_index(e) >= arity:
        raise ValueError(f"expression references variable {max_var_index(e)} but arity is {arity}")
    if max_depth is not None and depth(e) > max_depth:
        raise ValueError(f"expression depth {depth(e)} exceeds max_depth {max_depth}")

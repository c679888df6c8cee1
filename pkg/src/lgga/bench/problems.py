"""Registry of the Feynman-lecture benchmark equations and their known truths.

Physical constants that are not listed as inputs (Coulomb's k, the
gravitational G) are folded to 1 so every target is reachable without
constant fitting. Constants that appear among a row's truths (k_b, gamma)
are ordinary inputs. Inputs are sampled uniformly from [1, 5] unless a row
overrides that to keep the equation nonsingular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from ..expr import Alphabet, Expr, parse
from ..truths import parse_truths

ARITH = ("add", "sub", "mul", "pdiv")
DEFAULT_RANGE = (1.0, 5.0)


@dataclass(frozen=True)
class BenchmarkProblem:
    name: str
    var_names: tuple
    formula: str
    evaluator: Callable = field(repr=False)
    truth_dsl: tuple
    ranges: tuple = ()
    unary_ops: tuple = ()
    binary_ops: tuple = ARITH
    const_range: tuple | None = (-1.0, 1.0)
    constants: dict = field(default_factory=dict)
    title: str = ""
    unverified: bool = False
    notes: str = ""

    def __post_init__(self):
        if not self.ranges:
            object.__setattr__(self, "ranges", tuple(DEFAULT_RANGE for _ in self.var_names))
        if len(self.ranges) != len(self.var_names):
            raise ValueError(f"{self.name}: one sampling range per variable required")

    @property
    def arity(self) -> int:
        return len(self.var_names)

    @cached_property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.var_names, self.unary_ops, self.binary_ops, self.const_range)

    @cached_property
    def ground_truth(self) -> Expr:
        return parse(self.formula, self.var_names)

    @cached_property
    def truths(self) -> list:
        return parse_truths("\n".join(self.truth_dsl), self.var_names)

    def evaluate(self, X) -> np.ndarray:
        """Closed-form target on the rows of ``X`` (NaN where singular)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        with np.errstate(all="ignore"):
            return np.asarray(self.evaluator(*X.T), dtype=float).reshape(-1)

    def admissible(self, X) -> np.ndarray:
        return np.ones(np.atleast_2d(X).shape[0], dtype=bool)


def _parallel(r1, r2):
    s = r1 + r2
    # both resistors shorted: the limit is 0
    return np.where((s == 0) & (r1 * r2 == 0), 0.0, r1 * r2 / np.where(s == 0, np.nan, s))


ANGLE = (0.1, 1.4)

_PROBLEMS = (
    BenchmarkProblem(
        "resistance", ("r1", "r2"), "r1 * r2 / (r1 + r2)", _parallel,
        ("sz(r1, r2)", "out_le_min(r1, r2)"),
        title="Resistance",
    ),
    BenchmarkProblem(
        "snell", ("i", "r"), "sin(i) / sin(r)",
        lambda i, r: np.sin(i) / np.sin(r),
        ("inv_swap(i, r)",),
        ranges=(ANGLE, ANGLE), unary_ops=("sin", "cos"),
        title="Snell",
    ),
    BenchmarkProblem(
        "coulomb", ("q1", "q2", "r"), "q1 * q2 / square(r)",
        lambda q1, q2, r: q1 * q2 / r**2,
        ("sz(q1, q2)", "sign_agree(q1, q2)"),
        unary_ops=("square",), constants={"k": 1.0},
        title="Coulomb",
    ),
    BenchmarkProblem(
        "reflection", ("n1", "n2"), "abs((n1 - n2) / (n1 + n2)) ^ 2",
        lambda n1, n2: np.abs((n1 - n2) / (n1 + n2)) ** 2,
        ("range(0, 1)", "sym(n1, n2)"),
        unary_ops=("abs", "square"),
        title="Reflection",
    ),
    BenchmarkProblem(
        "gas", ("P", "V", "n", "T"), "P * V / (n * T)",
        lambda P, V, n, T: P * V / (n * T),
        ("sz(P, V)", "sym(n, T)"),
        title="Gas",
    ),
    BenchmarkProblem(
        "distance", ("x0", "x1", "y0", "y1"), "sqrt(square(x1 - x0) + square(y1 - y0))",
        lambda x0, x1, y0, y1: np.sqrt((x1 - x0) ** 2 + (y1 - y0) ** 2),
        ("sym(x0, x1)", "sym(y0, y1)", "guard(x0=0, x1=0, y0=0 -> abs(y1))"),
        unary_ops=("psqrt", "square"),
        title="Distance",
        notes="the all-zero guard labels abs(y1), equal to y1 on the sampled domain",
    ),
    BenchmarkProblem(
        "normal", ("x",), "exp(neg(square(x))) / (2 * pi)",
        lambda x: np.exp(-(x**2)) / (2 * math.pi),
        ("sym(x, -x)", f"guard(x=0 -> {1 / (2 * math.pi)!r})"),
        ranges=((-2.0, 2.0),), unary_ops=("exp", "neg", "square"),
        title="Normal",
        notes="x=0 label is 1/(2 pi) at full precision (0.1591549 rounded)",
    ),
    BenchmarkProblem(
        "dot", ("x1", "x2", "x3", "y1", "y2", "y3"), "x1 * y1 + x2 * y2 + x3 * y3",
        lambda x1, x2, x3, y1, y2, y3: x1 * y1 + x2 * y2 + x3 * y3,
        ("guard(x1=0, x2=0, x3=0 -> 0)", "guard(y1=0, y2=0, y3=0 -> 0)",
         "guard(x2=x1, x3=x1, y1=x1, y2=x1, y3=x1 -> 3 * square(x1))"),
        title="Dot",
    ),
    BenchmarkProblem(
        "field", ("q", "Ef", "B", "v", "theta"), "q * (Ef + B * v * sin(theta))",
        lambda q, Ef, B, v, theta: q * (Ef + B * v * np.sin(theta)),
        ("zero(q)", "sym(B, v)"),
        ranges=(DEFAULT_RANGE,) * 4 + (ANGLE,), unary_ops=("sin", "cos"),
        title="Field",
    ),
    BenchmarkProblem(
        "potential", ("m1", "m2", "r1", "r2"), "m1 * m2 / (1 / r2 - 1 / r1)",
        lambda m1, m2, r1, r2: m1 * m2 / (1 / r2 - 1 / r1),
        ("sz(m1, m2)",),
        ranges=(DEFAULT_RANGE, DEFAULT_RANGE, (3.0, 5.0), (1.0, 2.0)),
        constants={"G": 1.0},
        title="Potential",
        notes="r1 in [3,5] and r2 in [1,2] keep 1/r2 - 1/r1 away from 0",
    ),
    BenchmarkProblem(
        "centre_of_mass", ("m1", "m2", "r1", "r2"), "(m1 * r1 + m2 * r2) / (m1 + m2)",
        lambda m1, m2, r1, r2: (m1 * r1 + m2 * r2) / (m1 + m2),
        ("guard(r1=0, r2=0 -> 0)", "guard(m1=0 -> r2)"),
        title="Centre of Mass",
    ),
    BenchmarkProblem(
        "momentum", ("m", "r", "v", "theta"), "m * r * v * sin(theta)",
        lambda m, r, v, theta: m * r * v * np.sin(theta),
        ("sz(m, r, v)",),
        ranges=(DEFAULT_RANGE,) * 3 + (ANGLE,), unary_ops=("sin", "cos"),
        title="Momentum",
    ),
    BenchmarkProblem(
        "mass", ("m0", "v", "c"), "m0 / (1 - v / c)",
        lambda m0, v, c: m0 / (1 - v / c),
        ("zero(m0)",),
        ranges=(DEFAULT_RANGE, (1.0, 2.0), (3.0, 5.0)),
        title="Mass",
        notes="v in [1,2] and c in [3,5] keep v < c",
    ),
    BenchmarkProblem(
        "heat", ("pr", "V", "gamma"), "pr * V / (gamma - 1)",
        lambda pr, V, gamma: pr * V / (gamma - 1),
        ("sz(pr, V)",),
        ranges=(DEFAULT_RANGE, DEFAULT_RANGE, (2.0, 5.0)),
        title="Heat",
        notes="gamma in [2,5] keeps gamma - 1 away from 0",
    ),
    BenchmarkProblem(
        "boyle", ("n", "kb", "T", "V1", "V2"), "n * kb * T * log(V2 / V1)",
        lambda n, kb, T, V1, V2: n * kb * T * np.log(V2 / V1),
        ("sz(n, kb, T)",),
        unary_ops=("plog", "exp"),
        title="Boyle",
    ),
    BenchmarkProblem(
        "flow", ("pr", "gamma", "rho"), "sqrt(pr * gamma / rho)",
        lambda pr, gamma, rho: np.sqrt(pr * gamma / rho),
        ("sz(pr, gamma)", "guard(pr=1, gamma=1, rho=1 -> 1)"),
        unary_ops=("psqrt", "square"),
        title="Flow",
    ),
)

_OPTIONAL = (
    BenchmarkProblem(
        "larmor", ("g", "q", "B", "m"), "g * q * B / (2 * m)",
        lambda g, q, B, m: g * q * B / (2 * m),
        ("sz(g, q, B)",),
        title="gqB/2m",
        unverified=True,
        notes="only in the data-efficiency table; its truths are inferred, not listed",
    ),
)


def registry(include_optional: bool = False) -> list:
    """The sixteen benchmark problems, plus the unverified extra row on request."""
    return list(_PROBLEMS + (_OPTIONAL if include_optional else ()))


def get_problem(name: str) -> BenchmarkProblem:
    key = name.strip().lower().replace(" ", "_").replace("-", "_")
    for p in _PROBLEMS + _OPTIONAL:
        if p.name == key:
            return p
    raise KeyError(f"unknown problem {name!r}; valid names: {problem_names(True)}")


def problem_names(include_optional: bool = False) -> list:
    return [p.name for p in registry(include_optional)]

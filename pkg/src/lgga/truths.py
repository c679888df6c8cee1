"""Auxiliary truths: known properties of the unknown target function.

Each truth kind knows which transformed copies of the inputs it needs the
candidate evaluated on (``probes``), how to turn those values into a
per-point violation (zero means consistent), and, for the generative
kinds, how to derive new labelled points from an existing one without
consulting any oracle.

Text form, one truth per line (``#`` starts a comment)::

    sym(r1, r2)            symmetric under swapping any two listed inputs
    sym(x, -x)             even in x (unchanged when x is negated)
    zero(q1, q2)           output is 0 whenever any listed input is 0
    sz(r1, r2)             both of the above (expands to two truths)
    inv_swap(i, r)         f(a, b) * f(b, a) = 1 when both sides are nonzero
    range(0, 1)            output lies in the interval; [ ] for closed ends
    out_le_min(r1, r2)     output never exceeds the smallest listed input
    sign_agree(q1, q2)     output sign matches sign(q1 * q2)
    guard(m1=0 -> r2)      substitute inputs (constants or other inputs),
                           then the output equals the expression
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field, replace as dc_replace
from pathlib import Path
from typing import ClassVar, Sequence

import numpy as np

from .dataset import DataPoint, Dataset, generated
from .expr import Expr, evaluate_batch, max_var_index, parse, to_text
from .expr.text import ParseError

DEFAULT_VIOLATION_THRESHOLD = 1e-9
DEFAULT_EPSILON_GUARD = 1e-6


class TruthSyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


def _names(names, arity):
    return list(names) if names is not None else [f"x{i}" for i in range(arity)]


def _swap(X, i, j):
    Z = X.copy()
    Z[:, [i, j]] = X[:, [j, i]]
    return Z


def _set(X, i, value):
    Z = X.copy()
    Z[:, i] = value
    return Z


class _Truth:
    generative: ClassVar[bool] = False

    def referenced(self) -> set:
        raise NotImplementedError

    def check_arity(self, arity: int) -> None:
        bad = [v for v in self.referenced() if not 0 <= v < arity]
        if bad:
            raise ValueError(f"truth {self.id!r} references variable(s) {bad} outside arity {arity}")

    def probes(self, X) -> list:
        return []

    def prepare(self, X):
        return None

    def violations(self, fx, fp, X, aux) -> np.ndarray:
        raise NotImplementedError

    def derive(self, fx, fp, X, y, aux, threshold) -> list:
        return []

    def __post_init__(self):
        if not self.id:
            object.__setattr__(self, "id", _make_id(self.to_dsl()))


def _make_id(dsl: str) -> str:
    return re.sub(r"\s+", "", dsl).replace(",", ";")


@dataclass(frozen=True)
class Symmetry(_Truth):
    """f is unchanged when the inputs of any listed pair are exchanged."""

    pairs: tuple
    id: str = ""
    generative: ClassVar[bool] = True

    @classmethod
    def over(cls, indices: Sequence[int], id: str = "") -> "Symmetry":
        return cls(tuple(itertools.combinations(indices, 2)), id)

    def referenced(self):
        return {v for p in self.pairs for v in p}

    def to_dsl(self, names=None):
        n = _names(names, max(self.referenced(), default=0) + 1)
        vs = sorted(self.referenced())
        if set(itertools.combinations(vs, 2)) == set(map(tuple, self.pairs)):
            return f"sym({', '.join(n[v] for v in vs)})"
        return " ".join(f"sym({n[a]}, {n[b]})" for a, b in self.pairs)

    def probes(self, X):
        return [_swap(X, a, b) for a, b in self.pairs]

    def violations(self, fx, fp, X, aux):
        return np.max([np.abs(fx - f) for f in fp], axis=0) if fp else np.zeros_like(fx)

    def derive(self, fx, fp, X, y, aux, threshold):
        out = []
        for k, ((a, b), f) in enumerate(zip(self.pairs, fp)):
            for i in np.flatnonzero(np.abs(fx - f) > threshold):
                x = X[i].copy()
                x[[a, b]] = x[[b, a]]
                out.append((i, k, x, y[i]))
        return out


@dataclass(frozen=True)
class Reflection(_Truth):
    """f is unchanged when the listed inputs are negated."""

    vars: tuple
    id: str = ""
    generative: ClassVar[bool] = True

    def referenced(self):
        return set(self.vars)

    def to_dsl(self, names=None):
        n = _names(names, max(self.vars) + 1)
        return f"sym({', '.join([n[v] for v in self.vars] + ['-' + n[v] for v in self.vars])})"

    def _flip(self, X):
        Z = X.copy()
        Z[:, list(self.vars)] = -Z[:, list(self.vars)]
        return Z

    def probes(self, X):
        return [self._flip(X)]

    def violations(self, fx, fp, X, aux):
        return np.abs(fx - fp[0])

    def derive(self, fx, fp, X, y, aux, threshold):
        Z = self._flip(X)
        return [(i, 0, Z[i], y[i]) for i in np.flatnonzero(np.abs(fx - fp[0]) > threshold)]


@dataclass(frozen=True)
class ZeroCondition(_Truth):
    """f is 0 whenever any listed input is 0.

    Zeroing input v is only checked at rows where the other listed inputs
    are nonzero. Otherwise repeated derivation walks into the corner where
    several inputs vanish together, and there many targets (r1 r2 / (r1 + r2)
    at r1 = r2 = 0) are 0/0 and only equal 0 as a limit.
    """

    vars: tuple
    id: str = ""
    generative: ClassVar[bool] = True

    def referenced(self):
        return set(self.vars)

    def to_dsl(self, names=None):
        n = _names(names, max(self.vars) + 1)
        return f"zero({', '.join(n[v] for v in self.vars)})"

    def probes(self, X):
        return [_set(X, v, 0.0) for v in self.vars]

    def prepare(self, X):
        nz = X[:, list(self.vars)] != 0
        return [np.delete(nz, k, axis=1).all(axis=1) for k in range(len(self.vars))]

    def violations(self, fx, fp, X, aux):
        return np.max([np.where(ok, np.abs(f), 0.0) for f, ok in zip(fp, aux)], axis=0)

    def derive(self, fx, fp, X, y, aux, threshold):
        out = []
        for k, (v, f, ok) in enumerate(zip(self.vars, fp, aux)):
            for i in np.flatnonzero(ok & (np.abs(f) > threshold)):
                x = X[i].copy()
                x[v] = 0.0
                out.append((i, k, x, 0.0))
        return out


@dataclass(frozen=True)
class Alias:
    """Substitution target that copies another input."""

    index: int


@dataclass(frozen=True)
class GuardedValue(_Truth):
    """After substituting some inputs, f equals ``label_expr``.

    ``substitution`` is a tuple of ``(index, value)`` where ``value`` is a
    float or an :class:`Alias`. Constants are applied first; aliases then
    copy from the partially substituted vector. ``label_expr`` is evaluated
    on the substituted inputs.
    """

    substitution: tuple
    label_expr: Expr
    id: str = ""
    names: tuple | None = field(default=None, compare=False, repr=False)
    generative: ClassVar[bool] = True

    def referenced(self):
        refs = set()
        for v, val in self.substitution:
            refs.add(v)
            if isinstance(val, Alias):
                refs.add(val.index)
        m = max_var_index(self.label_expr)
        if m >= 0:
            refs.add(m)
        return refs

    def to_dsl(self, names=None):
        names = names or self.names
        n = _names(names, max(self.referenced(), default=0) + 1)
        parts = []
        for v, val in self.substitution:
            rhs = n[val.index] if isinstance(val, Alias) else _num(val)
            parts.append(f"{n[v]}={rhs}")
        return f"guard({', '.join(parts)} -> {to_text(self.label_expr, n)})"

    def substitute(self, X):
        Z = np.array(X, dtype=float, copy=True)
        for v, val in self.substitution:
            if not isinstance(val, Alias):
                Z[:, v] = val
        for v, val in self.substitution:
            if isinstance(val, Alias):
                Z[:, v] = Z[:, val.index]
        return Z

    def probes(self, X):
        return [self.substitute(X)]

    def prepare(self, X):
        Z = self.substitute(X)
        return Z, evaluate_batch(self.label_expr, Z).values

    def violations(self, fx, fp, X, aux):
        return np.abs(fp[0] - aux[1])

    def derive(self, fx, fp, X, y, aux, threshold):
        Z, labels = aux
        return [(i, 0, Z[i], labels[i]) for i in np.flatnonzero(np.abs(fp[0] - labels) > threshold)]


@dataclass(frozen=True)
class InverseSwap(_Truth):
    """f(..a..b..) = 1 / f(..b..a..) whenever neither side is (near) zero."""

    var_a: int
    var_b: int
    epsilon_guard: float = DEFAULT_EPSILON_GUARD
    id: str = ""
    generative: ClassVar[bool] = True

    def referenced(self):
        return {self.var_a, self.var_b}

    def to_dsl(self, names=None):
        n = _names(names, max(self.var_a, self.var_b) + 1)
        if self.epsilon_guard != DEFAULT_EPSILON_GUARD:
            return f"inv_swap({n[self.var_a]}, {n[self.var_b]}, {_num(self.epsilon_guard)})"
        return f"inv_swap({n[self.var_a]}, {n[self.var_b]})"

    def probes(self, X):
        return [_swap(X, self.var_a, self.var_b)]

    def violations(self, fx, fp, X, aux):
        fs = fp[0]
        live = (np.abs(fx) > self.epsilon_guard) & (np.abs(fs) > self.epsilon_guard)
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.abs(fx * fs - 1.0)
        return np.where(live, np.nan_to_num(v, nan=0.0, posinf=np.finfo(float).max), 0.0)

    def derive(self, fx, fp, X, y, aux, threshold):
        v = self.violations(fx, fp, X, aux)
        ok = (v > threshold) & (np.abs(y) > self.epsilon_guard)
        Z = _swap(X, self.var_a, self.var_b)
        return [(i, 0, Z[i], 1.0 / y[i]) for i in np.flatnonzero(ok)]


@dataclass(frozen=True)
class Range(_Truth):
    """Output lies between ``lo`` and ``hi`` (either may be infinite)."""

    lo: float = -math.inf
    hi: float = math.inf
    lo_open: bool = True
    hi_open: bool = True
    id: str = ""

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"range needs lo < hi, got ({self.lo}, {self.hi})")
        super().__post_init__()

    def referenced(self):
        return set()

    def to_dsl(self, names=None):
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"range{left}{_num(self.lo)}, {_num(self.hi)}{right}"

    def violations(self, fx, fp, X, aux):
        return np.maximum(0.0, np.maximum(self.lo - fx, fx - self.hi))


@dataclass(frozen=True)
class OutputBoundedByInputs(_Truth):
    """Output is no larger than the smallest listed input."""

    vars: tuple
    id: str = ""

    def referenced(self):
        return set(self.vars)

    def to_dsl(self, names=None):
        n = _names(names, max(self.vars) + 1)
        return f"out_le_min({', '.join(n[v] for v in self.vars)})"

    def violations(self, fx, fp, X, aux):
        return np.maximum(0.0, fx - np.min(X[:, list(self.vars)], axis=1))


@dataclass(frozen=True)
class SignAgreement(_Truth):
    """Output is positive iff the two inputs have the same sign.

    Graded: a disagreeing point contributes ``|f(x)|``.
    """

    var_a: int
    var_b: int
    id: str = ""

    def referenced(self):
        return {self.var_a, self.var_b}

    def to_dsl(self, names=None):
        n = _names(names, max(self.var_a, self.var_b) + 1)
        return f"sign_agree({n[self.var_a]}, {n[self.var_b]})"

    def violations(self, fx, fp, X, aux):
        p = X[:, self.var_a] * X[:, self.var_b]
        return np.where((p != 0) & (np.sign(fx) != np.sign(p)), np.abs(fx), 0.0)


AuxiliaryTruth = (Symmetry, Reflection, ZeroCondition, GuardedValue, InverseSwap, Range,
                  OutputBoundedByInputs, SignAgreement)


def _num(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


# Batch evaluation -----------------------------------------------------------


class TruthProgram:
    """Truths bound to a fixed input matrix.

    All probe matrices are stacked under ``X`` so a candidate needs one
    tree walk to produce its predictions and every truth's violations.
    """

    def __init__(self, truths: Sequence, X: np.ndarray, y: np.ndarray | None = None):
        self.truths = list(truths)
        self.X = np.asarray(X, dtype=float)
        self.y = None if y is None else np.asarray(y, dtype=float)
        n = self.X.shape[0]
        blocks = [self.X]
        self.spans = []
        offset = n
        for t in self.truths:
            t.check_arity(self.X.shape[1])
            ps = t.probes(self.X)
            self.spans.append([(offset + k * n, offset + (k + 1) * n) for k in range(len(ps))])
            offset += len(ps) * n
            blocks.extend(ps)
        self.stacked = np.vstack(blocks) if len(blocks) > 1 else self.X
        self.aux = [t.prepare(self.X) for t in self.truths]
        self.n = n

    def predict(self, expr: Expr) -> tuple:
        """Return ``(fx, probe_values)`` for ``expr``."""
        v = evaluate_batch(expr, self.stacked).values
        fx = v[: self.n]
        fp = [[v[a:b] for a, b in spans] for spans in self.spans]
        return fx, fp

    def violations(self, expr: Expr, predicted=None) -> list:
        fx, fp = predicted if predicted is not None else self.predict(expr)
        return [t.violations(fx, f, self.X, a) for t, f, a in zip(self.truths, fp, self.aux)]

    def truth_error(self, expr: Expr, predicted=None) -> float:
        if not self.truths or self.n == 0:
            return 0.0
        per_truth = [float(np.max(v)) for v in self.violations(expr, predicted)]
        return float(np.mean(per_truth))

    def mse(self, expr: Expr, predicted=None) -> float:
        fx = predicted[0] if predicted is not None else evaluate_batch(expr, self.X).values
        with np.errstate(over="ignore"):
            m = float(np.mean((fx - self.y) ** 2))
        return m if math.isfinite(m) else float(np.finfo(float).max)

    def counterexamples(self, expr: Expr, threshold: float = DEFAULT_VIOLATION_THRESHOLD,
                        generation: int = 0, predicted=None) -> list:
        """Derived points for every (point, truth) pair the candidate violates,
        ordered by source point, then truth, then sub-rule."""
        if self.y is None:
            raise ValueError("counterexample mining needs labels")
        fx, fp = predicted if predicted is not None else self.predict(expr)
        found = []
        for ti, (t, f, a) in enumerate(zip(self.truths, fp, self.aux)):
            if not t.generative:
                continue
            for src, sub, x, label in t.derive(fx, f, self.X, self.y, a, threshold):
                found.append((int(src), ti, sub, x, float(label), t.id))
        found.sort(key=lambda r: (r[0], r[1], r[2]))
        return [
            DataPoint(tuple(x), label, generated(tid, generation))
            for _, _, _, x, label, tid in found
            if np.isfinite(x).all() and math.isfinite(label)
        ]


# Point-level API ------------------------------------------------------------


def _point_matrix(point) -> np.ndarray:
    inputs = point.inputs if isinstance(point, DataPoint) else point
    return np.asarray(inputs, dtype=float).reshape(1, -1)


def violation(truth, candidate: Expr, point) -> float:
    """Violation of ``truth`` by ``candidate`` at one data point (>= 0)."""
    X = _point_matrix(point)
    prog = TruthProgram([truth], X)
    return float(prog.violations(candidate)[0][0])


def truth_error(truths: Sequence, candidate: Expr, dataset: Dataset) -> float:
    """Mean over truths of the largest violation over the dataset.

    Returns 0 for an empty truth set.
    """
    if not truths:
        return 0.0
    if len(dataset) == 0:
        raise ValueError("truth error needs a nonempty dataset")
    return TruthProgram(truths, dataset.X).truth_error(candidate)


def generate_counterexamples(truth, candidate: Expr, point: DataPoint,
                             violation_threshold: float = DEFAULT_VIOLATION_THRESHOLD,
                             generation: int = 0) -> list:
    """New sound points derived from ``point`` where ``candidate`` violates
    ``truth`` by more than the threshold. Loss-only kinds yield nothing."""
    if not truth.generative:
        return []
    if not math.isfinite(point.label):
        raise ValueError("source point needs a finite label")
    X = _point_matrix(point)
    prog = TruthProgram([truth], X, np.array([point.label]))
    return prog.counterexamples(candidate, violation_threshold, generation)


# DSL ------------------------------------------------------------------------

_CALL_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*([(\[])(.*)([)\]])\s*$", re.S)


def _var(name: str, alphabet_names: list, line) -> int:
    name = name.strip()
    if name not in alphabet_names:
        raise TruthSyntaxError(f"unknown variable {name!r}; expected one of {alphabet_names}", line)
    return alphabet_names.index(name)


def _float(text: str, line) -> float:
    t = text.strip()
    try:
        return float(t)
    except ValueError:
        raise TruthSyntaxError(f"expected a number, got {t!r}", line) from None


def parse_truth(text: str, alphabet, line: int | None = None) -> list:
    """Parse one DSL statement into a list of truths (``sz`` yields two)."""
    names = list(getattr(alphabet, "var_names", alphabet))
    m = _CALL_RE.match(text)
    if not m:
        raise TruthSyntaxError(f"expected 'kind(args)', got {text.strip()!r}", line)
    kind, open_b, body, close_b = m.groups()
    if kind != "range" and (open_b, close_b) != ("(", ")"):
        raise TruthSyntaxError(f"{kind} takes parenthesised arguments", line)

    if kind == "guard":
        if "->" not in body:
            raise TruthSyntaxError("guard needs 'assignments -> expression'", line)
        lhs, rhs = body.split("->", 1)
        subst = []
        for part in lhs.split(","):
            if "=" not in part:
                raise TruthSyntaxError(f"guard assignment {part.strip()!r} needs '='", line)
            var, val = part.split("=", 1)
            v = _var(var, names, line)
            val = val.strip()
            subst.append((v, Alias(names.index(val)) if val in names else _float(val, line)))
        try:
            label = parse(rhs.strip(), names)
        except ParseError as exc:
            raise TruthSyntaxError(f"bad guard expression: {exc}", line) from None
        return [GuardedValue(tuple(subst), label, names=tuple(names))]

    args = [a.strip() for a in body.split(",")] if body.strip() else []

    if kind == "range":
        if len(args) != 2:
            raise TruthSyntaxError("range takes (lo, hi)", line)
        lo, hi = _float(args[0], line), _float(args[1], line)
        if not lo < hi:
            raise TruthSyntaxError(f"range needs lo < hi, got ({lo}, {hi})", line)
        return [_named(Range(lo, hi, open_b == "(", close_b == ")"), names)]

    if kind == "sym":
        negated = [a[1:].strip() for a in args if a.startswith("-")]
        plain = [a for a in args if not a.startswith("-")]
        if negated:
            if sorted(negated) != sorted(plain):
                raise TruthSyntaxError("reflection form is sym(x, -x)", line)
            return [_named(Reflection(tuple(_var(a, names, line) for a in plain)), names)]
        idx = [_var(a, names, line) for a in args]
        if len(idx) < 2 or len(set(idx)) != len(idx):
            raise TruthSyntaxError("sym needs at least two distinct variables", line)
        return [_named(Symmetry.over(idx), names)]

    if kind in ("zero", "out_le_min", "sz"):
        idx = [_var(a, names, line) for a in args]
        if not idx:
            raise TruthSyntaxError(f"{kind} needs at least one variable", line)
        if kind == "zero":
            return [_named(ZeroCondition(tuple(idx)), names)]
        if kind == "out_le_min":
            return [_named(OutputBoundedByInputs(tuple(idx)), names)]
        if len(idx) < 2:
            raise TruthSyntaxError("sz needs at least two variables", line)
        return [_named(Symmetry.over(idx), names), _named(ZeroCondition(tuple(idx)), names)]

    if kind in ("inv_swap", "sign_agree"):
        if kind == "inv_swap" and len(args) == 3:
            a, b = (_var(x, names, line) for x in args[:2])
            return [_named(InverseSwap(a, b, _float(args[2], line)), names)]
        if len(args) != 2:
            raise TruthSyntaxError(f"{kind} takes two variables", line)
        a, b = (_var(x, names, line) for x in args)
        if a == b:
            raise TruthSyntaxError(f"{kind} needs two distinct variables", line)
        cls = InverseSwap if kind == "inv_swap" else SignAgreement
        return [_named(cls(a, b), names)]

    raise TruthSyntaxError(f"unknown truth kind {kind!r}", line)


def _named(t, names):
    """Re-issue ``t`` with an id spelled using the variable names."""
    return dc_replace(t, id=_make_id(t.to_dsl(names)))


def parse_truths(text: str, alphabet) -> list:
    """Parse a whole DSL document; errors carry the 1-based line number."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.extend(parse_truth(line, alphabet, lineno))
    ids = [t.id for t in out]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise TruthSyntaxError(f"duplicate truths: {dup}")
    return out


def load_truths(path, alphabet) -> list:
    return parse_truths(Path(path).read_text(), alphabet)


def truths_to_dsl(truths: Sequence, names) -> str:
    return "".join(t.to_dsl(names) + "\n" for t in truths)

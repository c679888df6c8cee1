"""Protected, vectorised evaluation of expression trees.

Every operator is total over finite inputs:

* ``pdiv(a, 0) = 1`` (any non-finite quotient becomes 1)
* ``plog(x) = ln|x|`` with ``plog(0) = 0``
* ``psqrt(x) = sqrt(|x|)``
* ``pow`` and ``exp`` are clamped to ``[-BIG, BIG]``; ``pow(0, b<0) = 1``
  and a NaN power (negative base, fractional exponent) is 1
* any other overflow saturates at ``+-BIG``

Rows where a replacement happened are reported as not clean, so callers
that need the true function value (the equivalence check) can skip them.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .nodes import Const, Expr, Unary, Var, max_var_index

BIG = 1e150


class InputShapeError(ValueError):
    """Inputs do not match the arity the expression needs."""


class Evaluation(NamedTuple):
    values: np.ndarray
    clean: np.ndarray


class _Flags:
    __slots__ = ("bad",)

    def __init__(self):
        self.bad = None

    def mark(self, mask):
        if self.bad is None:
            self.bad = mask
        else:
            self.bad = self.bad | mask


def _fix(r, nan_value, flags):
    """Replace non-finite entries: +-inf saturate, NaN becomes ``nan_value``."""
    if np.isfinite(r).all():
        return r
    flags.mark(~np.isfinite(r))
    return np.nan_to_num(r, nan=nan_value, posinf=BIG, neginf=-BIG)


def _clamp(r, flags):
    over = np.abs(r) > BIG
    if over.any():
        flags.mark(over)
        r = np.clip(r, -BIG, BIG)
    return r


def _unary(op, a, flags):
    if op == "neg":
        return -a
    if op == "sin":
        return np.sin(a)
    if op == "cos":
        return np.cos(a)
    if op == "abs":
        return np.abs(a)
    if op == "psqrt":
        return np.sqrt(np.abs(a))
    if op == "square":
        return _fix(a * a, 0.0, flags)
    if op == "exp":
        return _clamp(_fix(np.exp(a), 0.0, flags), flags)
    if op == "plog":
        r = np.log(np.abs(a))
        if np.isfinite(r).all():
            return r
        flags.mark(~np.isfinite(r))
        return np.nan_to_num(r, nan=0.0, posinf=0.0, neginf=0.0)
    raise ValueError(f"unknown unary op {op!r}")


def _binary(op, a, b, flags):
    if op == "add":
        return _fix(a + b, 0.0, flags)
    if op == "sub":
        return _fix(a - b, 0.0, flags)
    if op == "mul":
        return _fix(a * b, 0.0, flags)
    if op == "pdiv":
        r = a / b
        if np.isfinite(r).all():
            return r
        bad = ~np.isfinite(r)
        flags.mark(bad)
        return np.where(bad, 1.0, r)
    if op == "pow":
        r = np.power(a, b)
        zero_neg = (a == 0) & (b < 0)
        if np.any(zero_neg):
            flags.mark(zero_neg)
            r = np.where(zero_neg, 1.0, r)
        return _clamp(_fix(r, 1.0, flags), flags)
    raise ValueError(f"unknown binary op {op!r}")


def _eval(e, X, flags):
    t = type(e)
    if t is Var:
        return X[:, e.index]
    if t is Const:
        return np.float64(e.value)
    if t is Unary:
        return _unary(e.op, _eval(e.child, X, flags), flags)
    return _binary(e.op, _eval(e.left, X, flags), _eval(e.right, X, flags), flags)


def evaluate_batch(expr: Expr, X) -> Evaluation:
    """Evaluate ``expr`` on every row of ``X`` (shape ``(n, arity)``).

    Never returns NaN or infinity. ``clean[i]`` is False when a protected
    replacement was needed somewhere in row ``i``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputShapeError(f"expected a 2-d input matrix, got shape {X.shape}")
    flags = _Flags()
    try:
        with np.errstate(all="ignore"):
            out = _eval(expr, X, flags)
    except IndexError:
        need = max_var_index(expr) + 1
        raise InputShapeError(f"expression uses {need} variables, inputs have {X.shape[1]}") from None
    n = X.shape[0]
    values = np.broadcast_to(np.asarray(out, dtype=float), (n,)).copy()
    if flags.bad is None:
        clean = np.ones(n, dtype=bool)
    else:
        clean = ~np.broadcast_to(flags.bad, (n,))
    return Evaluation(values, clean)


def evaluate_checked(expr: Expr, inputs, arity: int | None = None) -> tuple:
    """Evaluate at a single point; returns ``(value, clean)``."""
    x = np.asarray(inputs, dtype=float).reshape(-1)
    if arity is not None and x.shape[0] != arity:
        raise InputShapeError(f"expected {arity} inputs, got {x.shape[0]}")
    if not np.isfinite(x).all():
        raise InputShapeError(f"inputs must be finite, got {x.tolist()}")
    ev = evaluate_batch(expr, x[None, :])
    return float(ev.values[0]), bool(ev.clean[0])


def evaluate(expr: Expr, inputs, arity: int | None = None) -> float:
    """Evaluate ``expr`` at one input vector with protected semantics."""
    return evaluate_checked(expr, inputs, arity)[0]


def semantically_equivalent(
    a: Expr,
    b: Expr,
    ranges,
    rng: np.random.Generator,
    n: int = 1000,
    rtol: float = 1e-6,
    max_rounds: int = 10,
) -> bool:
    """Sampling test that ``a`` and ``b`` compute the same function.

    Points are drawn uniformly from the per-variable ``ranges``; a point
    where either side needs a protected replacement is discarded and
    redrawn. True iff ``|a(x) - b(x)| <= rtol * (1 + |b(x)|)`` on ``n``
    clean points.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo = np.array([r[0] for r in ranges], dtype=float)
    hi = np.array([r[1] for r in ranges], dtype=float)
    if np.any(lo >= hi):
        raise ValueError(f"degenerate sampling range in {list(ranges)}")
    got = 0
    for _ in range(max_rounds):
        X = rng.uniform(lo, hi, size=(n - got, lo.size))
        ea, eb = evaluate_batch(a, X), evaluate_batch(b, X)
        keep = ea.clean & eb.clean
        va, vb = ea.values[keep], eb.values[keep]
        if np.any(np.abs(va - vb) > rtol * (1.0 + np.abs(vb))):
            return False
        got += int(keep.sum())
        if got >= n:
            return True
    return got > 0

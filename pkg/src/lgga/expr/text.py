"""Infix text form of expressions.

Grammar (whitespace is insignificant, names are case-sensitive)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , NUMBER            (* negative literal, unless followed by "^" *)
            | "-" , unary             (* neg *)
            | power ;
    power   = primary , [ "^" , unary ] ;          (* right associative *)
    primary = NUMBER | NAME | NAME , "(" , expr , { "," , expr } , ")"
            | "(" , expr , ")" ;

``/`` is protected division and ``^`` is ``pow``. Unary operators are
written as calls: ``neg sin cos exp log sqrt abs square``; ``plog`` and
``psqrt`` are accepted as aliases, as are ``pow(a, b)`` and ``pdiv(a, b)``.
``pi`` is a constant unless it names a variable.

The printer emits negative constants as ``(-c)`` and negation as
``neg(...)``, which makes ``parse(to_text(e)) == e`` hold structurally.
"""

from __future__ import annotations

import math
import re
from typing import NamedTuple, Sequence

from .nodes import Binary, Const, Expr, Unary, Var

_UNARY_NAMES = {
    "neg": "neg",
    "sin": "sin",
    "cos": "cos",
    "exp": "exp",
    "log": "plog",
    "plog": "plog",
    "sqrt": "psqrt",
    "psqrt": "psqrt",
    "abs": "abs",
    "square": "square",
}
_BINARY_CALLS = {"pow": "pow", "pdiv": "pdiv"}
_PRINT_UNARY = {"neg": "neg", "sin": "sin", "cos": "cos", "exp": "exp", "plog": "log",
                "psqrt": "sqrt", "abs": "abs", "square": "square"}
_INFIX = {"add": "+", "sub": "-", "mul": "*", "pdiv": "/", "pow": "^"}
_PREC = {"add": 1, "sub": 1, "mul": 2, "pdiv": 2, "pow": 4}
_ATOM = 10

RESERVED = frozenset(_UNARY_NAMES) | frozenset(_BINARY_CALLS)


class ParseError(ValueError):
    """Malformed expression text.

    ``token`` is the 1-based index of the offending token (the end of input
    counts as a token) and ``offset`` its character position.
    """

    def __init__(self, message: str, token: int, offset: int):
        super().__init__(f"{message} at token {token} (offset {offset})")
        self.token = token
        self.offset = offset


class UnknownIdentifierError(ParseError):
    pass


class ArityError(ParseError):
    pass


class _Tok(NamedTuple):
    kind: str  # "num", "name", "op", "end"
    text: str
    offset: int


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", len(toks) + 1, pos)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, var_names: Sequence[str]):
        self.toks = _tokenize(text)
        self.i = 0
        self.names = {name: k for k, name in enumerate(var_names)}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg, cls=ParseError, at=None):
        i = self.i if at is None else at
        raise cls(msg, i + 1, self.toks[i].offset)

    def expect(self, text):
        if self.tok.text != text or self.tok.kind != "op":
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            self.error(f"expected {text!r}, found {found}")
        self.i += 1

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self):
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = "add" if self.tok.text == "+" else "sub"
            self.i += 1
            e = Binary(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = "mul" if self.tok.text == "*" else "pdiv"
            self.i += 1
            e = Binary(op, e, self.unary())
        return e

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            nxt, after = self.toks[self.i + 1], self.toks[min(self.i + 2, len(self.toks) - 1)]
            if nxt.kind == "num" and not (after.kind == "op" and after.text == "^"):
                self.i += 2
                return Const(-float(nxt.text))
            self.i += 1
            return Unary("neg", self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            return Binary("pow", base, self.unary())
        return base

    def args(self):
        self.expect("(")
        out = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.i += 1
            out.append(self.expr())
        self.expect(")")
        return out

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Const(float(t.text))
        if t.kind == "name":
            at = self.i
            self.i += 1
            is_call = self.tok.kind == "op" and self.tok.text == "("
            if t.text in self.names and not is_call:
                return Var(self.names[t.text])
            if is_call and t.text in _UNARY_NAMES:
                a = self.args()
                if len(a) != 1:
                    self.error(f"{t.text} takes 1 argument, got {len(a)}", ArityError, at)
                return Unary(_UNARY_NAMES[t.text], a[0])
            if is_call and t.text in _BINARY_CALLS:
                a = self.args()
                if len(a) != 2:
                    self.error(f"{t.text} takes 2 arguments, got {len(a)}", ArityError, at)
                return Binary(_BINARY_CALLS[t.text], a[0], a[1])
            if t.text == "pi" and not is_call:
                return Const(math.pi)
            if t.text in _UNARY_NAMES or t.text in _BINARY_CALLS:
                self.error(f"function {t.text!r} needs an argument list", ArityError, at)
            self.error(f"unknown identifier {t.text!r}", UnknownIdentifierError, at)
        if t.kind == "op" and t.text == "(":
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if t.kind == "end" else repr(t.text)
        self.error(f"expected an operand, found {found}")


def parse(text: str, alphabet_or_names) -> Expr:
    """Parse infix ``text``; variable names come from an ``Alphabet`` or a list."""
    names = getattr(alphabet_or_names, "var_names", alphabet_or_names)
    return _Parser(text, list(names)).parse()


def _prec(e) -> int:
    if type(e) is Binary:
        return _PREC[e.op]
    return _ATOM


def to_text(e: Expr, names: Sequence[str] | None = None) -> str:
    """Render ``e`` in the infix grammar, using ``names`` for variables.

    Without names, variables print as ``x0, x1, ...``.
    """
    names = getattr(names, "var_names", names)
    return _render(e, names)


def _render(e, names) -> str:
    t = type(e)
    if t is Var:
        return names[e.index] if names is not None else f"x{e.index}"
    if t is Const:
        s = repr(float(e.value))
        return f"({s})" if s.startswith("-") else s
    if t is Unary:
        return f"{_PRINT_UNARY[e.op]}({_render(e.child, names)})"
    p = _PREC[e.op]
    left, right = _render(e.left, names), _render(e.right, names)
    if e.op == "pow":
        if _prec(e.left) <= p:
            left = f"({left})"
        if _prec(e.right) < p:
            right = f"({right})"
    else:
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
    return f"{left} {_INFIX[e.op]} {right}"

"""Tiny expression language for right-hand sides f(t, y).

Grammar (no unary minus; write "0 - x"):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' factor)?
    base   := number | 't' | 'y' index? | func '(' expr ')' | '(' expr ')'
    func   := ln | exp | sin | cos | tanh | abs

``y`` without an index is only allowed for scalar problems; ``y1`` .. ``yn``
select components.  Evaluation is over the reals and raises EvalError when an
operation leaves the real domain (ln of a nonpositive value, fractional power
of a negative base, overflow).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EvalError

__all__ = ["RhsExpression", "RhsSyntaxError", "ArityError", "RhsIndexError", "parse_rhs"]


class RhsSyntaxError(ValueError):
    """Malformed source; carries 1-based line and column of the offender."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class ArityError(RhsSyntaxError):
    """Call of a name outside the supported function set."""


class RhsIndexError(RhsSyntaxError, IndexError):
    """Component index out of range for the problem dimension."""


_FUNCS = {
    "ln": lambda x: math.log(x),
    "exp": math.exp,
    "sin": math.sin,
    "cos": math.cos,
    "tanh": math.tanh,
    "abs": abs,
}

_TOKEN_RE = re.compile(
    r"(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r"|(?P<ws>[ \t\r]+)"
    r"|(?P<nl>\n)"
)


def _tokenize(source: str):
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise RhsSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        pos = m.end()
        if m.lastgroup == "ws":
            col += len(m.group())
            continue
        if m.lastgroup == "nl":
            line += 1
            col = 1
            continue
        tokens.append((m.lastgroup, m.group(), line, col))
        col += len(m.group())
    tokens.append(("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, source: str, n: int):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.n = n

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, symbol: str):
        kind, val, line, col = self.peek()
        if kind != "op" or val != symbol:
            raise RhsSyntaxError(f"expected {symbol!r}, found {val or 'end of input'!r}", line, col)
        return self.take()

    def parse(self):
        node = self.expr()
        kind, val, line, col = self.peek()
        if kind != "end":
            raise RhsSyntaxError(f"unexpected trailing input {val!r}", line, col)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                node = (val, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, val, _, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                node = (val, node, self.factor())
            else:
                return node

    def factor(self):
        node = self.base()
        kind, val, _, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return ("^", node, self.factor())  # right associative
        return node

    def base(self):
        kind, val, line, col = self.take()
        if kind == "num":
            return ("num", float(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "name":
            if val == "t":
                return ("t",)
            m = re.fullmatch(r"y(\d*)", val)
            if m:
                if m.group(1) == "":
                    if self.n != 1:
                        raise RhsIndexError(
                            f"bare 'y' needs a component index for dimension {self.n}",
                            line,
                            col,
                        )
                    return ("y", 0)
                idx = int(m.group(1))
                if not 1 <= idx <= self.n:
                    raise RhsIndexError(
                        f"component y{idx} out of range for dimension {self.n}", line, col
                    )
                return ("y", idx - 1)
            nxt_kind, nxt_val, _, _ = self.peek()
            if nxt_kind == "op" and nxt_val == "(":
                if val not in _FUNCS:
                    raise ArityError(f"unknown function {val!r}", line, col)
                self.take()
                node = self.expr()
                self.expect_op(")")
                return ("call", val, node)
            raise RhsSyntaxError(f"unknown identifier {val!r}", line, col)
        raise RhsSyntaxError(f"unexpected token {val or 'end of input'!r}", line, col)


def _eval(node, t: float, y: np.ndarray) -> float:
    op = node[0]
    if op == "num":
        return node[1]
    if op == "t":
        return t
    if op == "y":
        return float(y[node[1]])
    if op == "call":
        arg = _eval(node[2], t, y)
        try:
            return _FUNCS[node[1]](arg)
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"{node[1]}({arg!r}) is not defined over the reals") from exc
    a = _eval(node[1], t, y)
    b = _eval(node[2], t, y)
    try:
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0.0:
                raise EvalError("division by zero")
            return a / b
        if op == "^":
            if a < 0.0 and b != round(b):
                raise EvalError(f"fractional power of negative base {a!r}")
            if a == 0.0 and b < 0.0:
                raise EvalError("zero raised to a negative power")
            return float(a**b)
    except OverflowError as exc:
        raise EvalError(f"overflow in {op!r}") from exc
    raise AssertionError(f"unhandled node {op!r}")


@dataclass(frozen=True)
class RhsExpression:
    """Parsed expression over t and y1..yn, evaluable as expr(t, y)."""

    source: str
    n: int
    ast: tuple

    def __call__(self, t: float, y=None) -> float:
        y_arr = np.zeros(self.n) if y is None else np.atleast_1d(np.asarray(y, dtype=float))
        value = _eval(self.ast, float(t), y_arr)
        if isinstance(value, float) and not math.isfinite(value):
            raise EvalError(f"expression evaluated to {value}")
        return value

    @property
    def uses_state(self) -> bool:
        def walk(node):
            if node[0] == "y":
                return True
            return any(walk(c) for c in node[1:] if isinstance(c, tuple))

        return walk(self.ast)


def parse_rhs(source: str, n: int) -> RhsExpression:
    """Parse a right-hand-side expression for an n-dimensional problem."""
    if not isinstance(source, str) or not source.strip():
        raise RhsSyntaxError("empty expression", 1, 1)
    if n < 0:
        raise ValueError(f"dimension must be nonnegative, got {n}")
    ast = _Parser(source, n).parse()
    return RhsExpression(source=source, n=n, ast=ast)

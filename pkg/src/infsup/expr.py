"""Parser/evaluator for coefficient expressions in the variables x and t.

Grammar (tightest binding first): ``^`` (right-associative), unary minus,
``* /``, ``+ -``.  Atoms are numbers, ``pi``, the variables ``x`` and ``t``,
parenthesized expressions, and the functions sin, cos, exp, sqrt.  Evaluation
is vectorized over numpy arrays and deterministic; ``eval_checked`` raises
EvalError at the first probed point where the value is not finite.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class ParseError(ValueError):
    """Syntax error; carries the byte offset and the expected-token set."""

    def __init__(self, offset: int, expected: tuple[str, ...], found: str):
        self.offset = offset
        self.expected = tuple(expected)
        self.found = found
        super().__init__(
            f"parse error at offset {offset}: expected {' or '.join(expected)}, "
            f"found {found}"
        )


class EvalError(ValueError):
    """Expression evaluated to a non-finite value at a probed point."""

    def __init__(self, source: str, x: float, t: float):
        self.source = source
        self.x = x
        self.t = t
        super().__init__(
            f"expression {source!r} is not finite at x={x:.9g}, t={t:.9g}"
        )


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "name" | one of "+-*/^()" | "end"
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None or m.end() == pos:
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(src) - len(stripped)
            raise ParseError(bad_at, ("number", "name", "operator"), repr(src[bad_at]))
        if m.lastgroup == "number":
            tokens.append(_Token("number", m.group("number"), m.start("number")))
        elif m.lastgroup == "name":
            tokens.append(_Token("name", m.group("name"), m.start("name")))
        else:
            op = m.group("op")
            tokens.append(_Token(op, op, m.start("op")))
        pos = m.end()
    tokens.append(_Token("end", "<end>", len(src)))
    return tokens


# Expression nodes evaluate to broadcast numpy arrays.

@dataclass(frozen=True)
class _Num:
    value: float

    def eval(self, x, t):
        return np.broadcast_arrays(np.asarray(self.value, dtype=float), x, t)[0]


@dataclass(frozen=True)
class _Var:
    name: str  # "x" or "t"

    def eval(self, x, t):
        return np.broadcast_arrays(x if self.name == "x" else t, x, t)[0]


@dataclass(frozen=True)
class _Neg:
    arg: object

    def eval(self, x, t):
        return -self.arg.eval(x, t)


@dataclass(frozen=True)
class _BinOp:
    op: str
    lhs: object
    rhs: object

    def eval(self, x, t):
        a = self.lhs.eval(x, t)
        b = self.rhs.eval(x, t)
        with np.errstate(all="ignore"):
            if self.op == "+":
                return a + b
            if self.op == "-":
                return a - b
            if self.op == "*":
                return a * b
            if self.op == "/":
                return a / b
            return np.power(a, b)


@dataclass(frozen=True)
class _Call:
    func: str
    arg: object

    def eval(self, x, t):
        with np.errstate(all="ignore"):
            return FUNCTIONS[self.func](self.arg.eval(x, t))


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, expected: tuple[str, ...]):
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(tok.offset, expected, repr(tok.text))
        return self.advance()

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(tok.offset, ("operator", "end of input"), repr(tok.text))
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            node = _BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            node = _BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek().kind == "-":
            self.advance()
            return _Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().kind == "^":
            self.advance()
            # Right-associative; the exponent may carry its own unary minus.
            return _BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return _Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text in ("x", "t"):
                return _Var(tok.text)
            if tok.text == "pi":
                return _Num(float(np.pi))
            if tok.text in FUNCTIONS:
                self.expect("(", ("'('",))
                arg = self.expr()
                self.expect(")", ("')'",))
                return _Call(tok.text, arg)
            raise ParseError(
                tok.offset,
                ("'x'", "'t'", "'pi'", *(f"'{f}'" for f in sorted(FUNCTIONS))),
                repr(tok.text),
            )
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")", ("')'",))
            return node
        raise ParseError(tok.offset, ("number", "name", "'('", "'-'"), repr(tok.text))


@dataclass(frozen=True)
class Coefficient:
    """Parsed expression over (x, t); callable with scalars or arrays."""

    source: str
    root: object

    def __call__(self, x, t) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return self.root.eval(x, t)

    def eval_checked(self, x, t) -> np.ndarray:
        """Evaluate and reject non-finite values, naming the first bad point."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        values = self.root.eval(x, t)
        finite = np.isfinite(values)
        if not np.all(finite):
            bad = np.unravel_index(int(np.argmin(finite)), np.shape(finite))
            xb, tb = np.broadcast_arrays(x, t)
            raise EvalError(self.source, float(xb[bad]), float(tb[bad]))
        return values


def parse_coefficient(src: str) -> Coefficient:
    """Parse an expression; raises ParseError with offset and expected tokens."""
    if not src or not src.strip():
        raise ParseError(0, ("number", "name", "'('", "'-'"), "empty input")
    return Coefficient(source=src, root=_Parser(src).parse())

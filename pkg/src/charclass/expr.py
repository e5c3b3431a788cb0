"""Tiny arithmetic expression parser shared by the CLI and the polynomial types.

Grammar (whitespace insignificant)::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' INT)?
    atom   := NUMBER | NAME | '(' expr ')'

NUMBER is a non-negative integer, optionally written ``a/b`` through the
division operator.  The parser produces a small AST; :func:`evaluate` folds it
with caller supplied callbacks so the same syntax serves integral cohomology
classes, graded polynomials and coordinate polynomials.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Union


class ExprError(ValueError):
    """Syntax or evaluation error at a 0-based column of the parsed text."""

    def __init__(self, message: str, column: int = 0):
        super().__init__(message)
        self.message = message
        self.column = column


@dataclass(frozen=True)
class Num:
    value: int
    col: int


@dataclass(frozen=True)
class Name:
    name: str
    col: int


@dataclass(frozen=True)
class Neg:
    arg: "Node"
    col: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    col: int


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int
    col: int


Node = Union[Num, Name, Neg, BinOp, Pow]

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")
MAX_EXPONENT = 64


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        if m.group(1) is not None:
            tokens.append(("num", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), m.start(2)))
        elif m.group(3) is not None:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ExprError(f"unexpected character {ch!r}", m.start(3))
            tokens.append(("op", ch, m.start(3)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, col = self.take()
        if kind != "op" or val != op:
            raise ExprError(f"expected {op!r}", col)

    def parse(self) -> Node:
        kind, _, col = self.peek()
        if kind == "end":
            raise ExprError("empty expression", col)
        node = self.expr()
        kind, val, col = self.peek()
        if kind != "end":
            raise ExprError(f"unexpected {val!r}", col)
        return node

    def expr(self) -> Node:
        kind, val, col = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            node = self.term()
            if val == "-":
                node = Neg(node, col)
        else:
            node = self.term()
        while True:
            kind, val, col = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                node = BinOp(val, node, self.term(), col)
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            kind, val, col = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                node = BinOp(val, node, self.factor(), col)
            else:
                return node

    def factor(self) -> Node:
        node = self.atom()
        kind, val, col = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val, ecol = self.take()
            if kind != "num":
                raise ExprError("exponent must be a non-negative integer", ecol)
            exponent = int(val)
            if exponent > MAX_EXPONENT:
                raise ExprError(f"exponent {exponent} exceeds {MAX_EXPONENT}", ecol)
            node = Pow(node, exponent, col)
        return node

    def atom(self) -> Node:
        kind, val, col = self.take()
        if kind == "num":
            return Num(int(val), col)
        if kind == "name":
            return Name(val, col)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "end":
            raise ExprError("unexpected end of expression", col)
        raise ExprError(f"unexpected {val!r}", col)


MAX_NESTING = 64
MAX_CONSTANT_BITS = 1 << 16


def parse_expr(text: str) -> Node:
    parser = _Parser(text)
    depth = 0
    for kind, val, col in parser.tokens:
        if kind == "op" and val == "(":
            depth += 1
            if depth > MAX_NESTING:
                raise ExprError(f"parentheses nested deeper than {MAX_NESTING}", col)
        elif kind == "op" and val == ")":
            depth -= 1
    return parser.parse()


def degree_bound(node: Node) -> int:
    """Upper bound for the polynomial degree of ``node`` in its names."""
    if isinstance(node, Num):
        return 0
    if isinstance(node, Name):
        return 1
    if isinstance(node, Neg):
        return degree_bound(node.arg)
    if isinstance(node, Pow):
        return degree_bound(node.base) * node.exponent
    if node.op == "*":
        return degree_bound(node.left) + degree_bound(node.right)
    if node.op == "/":
        return degree_bound(node.left)
    return max(degree_bound(node.left), degree_bound(node.right))


def evaluate(
    node: Node,
    number: Callable[[Fraction], Any],
    name: Callable[[str, int], Any],
) -> Any:
    """Fold ``node`` into a value.

    ``number`` lifts a rational constant; ``name(identifier, column)`` resolves
    an identifier and may raise :class:`ExprError`.  Values must support
    ``+ - *`` and ``**`` by ints.  Division is only allowed by a constant
    subexpression (folded to a Fraction).
    """

    def const(n: Node) -> Fraction | None:
        if isinstance(n, Num):
            return Fraction(n.value)
        if isinstance(n, Neg):
            v = const(n.arg)
            return None if v is None else -v
        if isinstance(n, Pow):
            v = const(n.base)
            if v is None:
                return None
            bits = max(v.numerator.bit_length(), v.denominator.bit_length())
            if bits * n.exponent > MAX_CONSTANT_BITS:
                raise ExprError("constant too large", n.col)
            return v**n.exponent
        if isinstance(n, BinOp):
            a, b = const(n.left), const(n.right)
            if a is None or b is None:
                return None
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                if a.numerator.bit_length() + b.numerator.bit_length() > MAX_CONSTANT_BITS:
                    raise ExprError("constant too large", n.col)
                return a * b
            if b == 0:
                raise ExprError("division by zero", n.col)
            return a / b
        return None

    def go(n: Node):
        c = const(n)
        if c is not None:
            return number(c)
        if isinstance(n, Name):
            return name(n.name, n.col)
        if isinstance(n, Neg):
            return -go(n.arg)
        if isinstance(n, Pow):
            return go(n.base) ** n.exponent
        assert isinstance(n, BinOp)
        if n.op == "/":
            d = const(n.right)
            if d is None:
                raise ExprError("division only by a constant", n.col)
            if d == 0:
                raise ExprError("division by zero", n.col)
            return go(n.left) * number(1 / d)
        left, right = go(n.left), go(n.right)
        if n.op == "+":
            return left + right
        if n.op == "-":
            return left - right
        return left * right

    return go(node)


def format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"

"""Tiny arithmetic expression language for densities.

Config files describe target densities and jump densities as expressions in
one variable ``x``.  Supported syntax: numeric literals, ``x``, binary
``+ - * / ^`` (``^`` right-associative and binding tighter than unary minus),
unary minus, the functions ``exp``, ``ln``, ``sqrt``, ``abs``, and
``indicator(a, b)`` which is 1 on the open interval (a, b) and 0 elsewhere.
Indicator bounds must be numeric literals so that breakpoints can be read off
the syntax tree.

Grammar (EBNF)::

    expr      = term { ("+" | "-") term } ;
    term      = unary { ("*" | "/") unary } ;
    unary     = "-" unary | power ;
    power     = atom [ "^" unary ] ;
    atom      = NUMBER | "x" | "(" expr ")"
              | ("exp" | "ln" | "sqrt" | "abs") "(" expr ")"
              | "indicator" "(" signed_number "," signed_number ")" ;

Evaluation is numpy-vectorized: ``evaluate`` accepts a float or an ndarray.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ExprDomainError",
    "NonFiniteValueError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Func",
    "Indicator",
    "parse",
    "evaluate",
    "breakpoints_of",
    "pretty",
    "as_function",
]

_FUNCTIONS = ("exp", "ln", "sqrt", "abs")


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    """Syntax error; carries the byte offset of the offending token."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ExprDomainError(ExprError):
    """ln/sqrt of a negative number, or 0 raised to a negative power."""


class NonFiniteValueError(ExprError):
    """Evaluation produced inf or nan (overflow, division by zero)."""


# --- AST ----------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Func:
    name: str  # exp | ln | sqrt | abs
    arg: object


@dataclass(frozen=True)
class Indicator:
    lo: float
    hi: float


# --- tokenizer ----------------------------------------------------------

_OPS = set("+-*/^(),")


def _tokenize(source):
    tokens = []
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c in _OPS:
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                value = float(text)
            except ValueError:
                raise ExprSyntaxError(f"malformed number {text!r}", i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(("ident", source[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(("end", None, n))
    return tokens


# --- parser -------------------------------------------------------------


class _Parser:
    def __init__(self, source):
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind, what):
        tok = self.advance()
        if tok[0] != kind:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExprSyntaxError(f"expected {what}, found {found}", tok[2])
        return tok

    def parse_expr(self):
        node = self.parse_term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            node = BinOp(op, node, self.parse_term())
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            node = BinOp(op, node, self.parse_unary())
        return node

    def parse_unary(self):
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek()[0] == "^":
            self.advance()
            return BinOp("^", base, self.parse_unary())
        return base

    def parse_atom(self):
        tok = self.advance()
        kind, value, offset = tok
        if kind == "num":
            return Num(value)
        if kind == "(":
            node = self.parse_expr()
            self.expect(")", "')'")
            return node
        if kind == "ident":
            if value == "x":
                return Var()
            if value in _FUNCTIONS:
                self.expect("(", "'(' after function name")
                arg = self.parse_expr()
                self.expect(")", "')'")
                return Func(value, arg)
            if value == "indicator":
                self.expect("(", "'(' after indicator")
                lo = self.parse_signed_number()
                self.expect(",", "','")
                hi = self.parse_signed_number()
                close = self.expect(")", "')'")
                if not lo < hi:
                    raise ExprSyntaxError(
                        f"indicator bounds must satisfy lo < hi, got ({lo}, {hi})",
                        close[2],
                    )
                return Indicator(lo, hi)
            raise UnknownIdentifierError(f"unknown identifier {value!r}", offset)
        found = "end of input" if kind == "end" else repr(value)
        raise ExprSyntaxError(f"expected a value, found {found}", offset)

    def parse_signed_number(self):
        negate = False
        while self.peek()[0] == "-":
            self.advance()
            negate = not negate
        tok = self.expect("num", "numeric literal (indicator bounds must be literals)")
        return -tok[1] if negate else tok[1]


def parse(source):
    """Parse ``source`` into an AST.  Raises :class:`ExprSyntaxError`."""
    parser = _Parser(source)
    node = parser.parse_expr()
    tok = parser.peek()
    if tok[0] != "end":
        raise ExprSyntaxError(f"unexpected trailing input {tok[1]!r}", tok[2])
    return node


# --- evaluation ---------------------------------------------------------


def _eval(node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, Func):
        arg = _eval(node.arg, x)
        if node.name == "exp":
            with np.errstate(over="ignore"):
                return np.exp(arg)
        if node.name == "ln":
            if np.any(np.asarray(arg) <= 0.0):
                raise ExprDomainError("ln of a non-positive argument")
            return np.log(arg)
        if node.name == "sqrt":
            if np.any(np.asarray(arg) < 0.0):
                raise ExprDomainError("sqrt of a negative argument")
            return np.sqrt(arg)
        return np.abs(arg)
    if isinstance(node, Indicator):
        return ((x > node.lo) & (x < node.hi)) * 1.0
    if isinstance(node, BinOp):
        left = _eval(node.left, x)
        right = _eval(node.right, x)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.divide(left, right)
        # power
        left_a = np.asarray(left)
        right_a = np.asarray(right)
        if np.any((left_a == 0.0) & (right_a < 0.0)):
            raise ExprDomainError("0 raised to a negative power")
        if np.any((left_a < 0.0) & (right_a != np.floor(right_a))):
            raise ExprDomainError("negative base with non-integer exponent")
        with np.errstate(over="ignore"):
            return np.power(left, right)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(e, x):
    """Evaluate expression ``e`` at ``x`` (float or ndarray).

    Raises :class:`ExprDomainError` for ln/sqrt domain violations and
    0^negative, and :class:`NonFiniteValueError` if the result contains
    inf or nan (overflow, division by zero).
    """
    scalar = np.isscalar(x) or (isinstance(x, np.ndarray) and x.ndim == 0)
    arr = np.asarray(x, dtype=float)
    result = np.broadcast_to(np.asarray(_eval(e, arr), dtype=float), arr.shape)
    if not np.all(np.isfinite(result)):
        raise NonFiniteValueError("expression evaluated to a non-finite value")
    if scalar:
        return float(result)
    return np.array(result)


def as_function(e):
    """Wrap an AST as a plain callable of ``x``."""
    return lambda x: evaluate(e, x)


def breakpoints_of(e):
    """Sorted, deduplicated indicator endpoints appearing in ``e``."""
    found = set()

    def walk(node):
        if isinstance(node, Indicator):
            found.add(node.lo)
            found.add(node.hi)
        elif isinstance(node, Neg):
            walk(node.operand)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Func):
            walk(node.arg)

    walk(e)
    return sorted(found)


def pretty(e):
    """Fully parenthesized source form; ``parse(pretty(e))`` equals ``e``."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Neg):
        return f"(-{pretty(e.operand)})"
    if isinstance(e, BinOp):
        return f"({pretty(e.left)} {e.op} {pretty(e.right)})"
    if isinstance(e, Func):
        return f"{e.name}({pretty(e.arg)})"
    if isinstance(e, Indicator):
        return f"indicator({repr(e.lo)}, {repr(e.hi)})"
    raise TypeError(f"not an expression node: {e!r}")

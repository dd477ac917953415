"""Small arithmetic expression language for coefficient fields.

Grammar (precedence climbing):

    expr   := term  (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative, tighter than unary minus
    atom   := NUMBER | 'x' | 'y' | 'pi' | FUNC '(' expr ')' | '(' expr ')'

Functions: sin cos exp sqrt abs.  So "-2^2" is -(2^2) = -4.

Expressions are immutable tuples; ``evaluate`` is the scalar reference
interpreter, ``compile_vectorized`` emits a numpy-broadcasting closure used by
quadrature loops.  The two are cross-checked by a property test.
"""

import math
import re

import numpy as np

from .errors import DomainError, ExpressionSyntaxError, UnknownIdentifier

_FUNCTIONS = ("sin", "cos", "exp", "sqrt", "abs")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def tokenize(src):
    """Yield (kind, value, byte_offset) triples; raises on junk bytes."""
    pos = 0
    out = []
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            offset = len(src) - len(stripped)
            raise ExpressionSyntaxError(f"unexpected character {stripped[0]!r}", offset)
        if m.group("num") is not None:
            out.append(("num", float(m.group("num")), m.start("num")))
        elif m.group("name") is not None:
            out.append(("name", m.group("name"), m.start("name")))
        else:
            out.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ExpressionSyntaxError(f"expected '{op}'", offset)
        return self.advance()

    def parse_expr(self):
        node = self.parse_term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                node = ("bin", value, node, self.parse_term())
            else:
                return node

    def parse_term(self):
        node = self.parse_unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                node = ("bin", value, node, self.parse_unary())
            else:
                return node

    def parse_unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return ("neg", self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return ("bin", "^", base, self.parse_unary())
        return base

    def parse_atom(self):
        kind, value, offset = self.advance()
        if kind == "num":
            return ("num", value)
        if kind == "name":
            if value in ("x", "y"):
                return ("var", value)
            if value == "pi":
                return ("num", math.pi)
            if value in _FUNCTIONS:
                self.expect_op("(")
                arg = self.parse_expr()
                self.expect_op(")")
                return ("call", value, arg)
            raise UnknownIdentifier(value, offset)
        if kind == "op" and value == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(f"unexpected token {value!r}", offset)


def parse(src):
    """Parse source text into an expression tree."""
    parser = _Parser(tokenize(src))
    node = parser.parse_expr()
    kind, value, offset = parser.peek()
    if kind != "end":
        raise ExpressionSyntaxError(f"trailing input {value!r}", offset)
    return node


def _pow_scalar(a, b):
    if a == 0.0 and b < 0.0:
        raise DomainError("0 raised to a negative power")
    if a < 0.0 and b != math.floor(b):
        raise DomainError("negative base with non-integer exponent")
    try:
        return float(a) ** float(b)
    except OverflowError:
        return math.inf if (a > 1.0 or (a < -1.0 and b % 2 == 0)) else -math.inf


def evaluate(expr, x, y):
    """Scalar tree-walking interpreter (the reference evaluator)."""
    kind = expr[0]
    if kind == "num":
        return expr[1]
    if kind == "var":
        return float(x) if expr[1] == "x" else float(y)
    if kind == "neg":
        return -evaluate(expr[1], x, y)
    if kind == "bin":
        _, op, lhs, rhs = expr
        a = evaluate(lhs, x, y)
        b = evaluate(rhs, x, y)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0.0:
                raise DomainError("division by zero")
            return a / b
        return _pow_scalar(a, b)
    _, fn, arg = expr
    v = evaluate(arg, x, y)
    if fn == "sqrt":
        if v < 0.0:
            raise DomainError("sqrt of a negative number")
        return math.sqrt(v)
    if fn == "abs":
        return abs(v)
    try:
        return getattr(math, fn)(v)
    except OverflowError:
        return math.inf


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_source(expr):
    """Canonical printer; parse(to_source(parse(s))) is stable."""

    def render(node, parent_prec, right_side):
        kind = node[0]
        if kind == "num":
            return repr(node[1])
        if kind == "var":
            return node[1]
        if kind == "call":
            return f"{node[1]}({render(node[2], 0, False)})"
        if kind == "neg":
            body = render(node[1], _PRECEDENCE["neg"], False)
            text = f"-{body}"
            prec = _PRECEDENCE["neg"]
        else:
            _, op, lhs, rhs = node
            prec = _PRECEDENCE[op]
            # '-'/'/' are left-associative, '^' right-associative: parenthesize
            # the side that would rebind.
            left = render(lhs, prec if op != "^" else prec + 1, False)
            right = render(rhs, prec + (1 if op in "-/" else 0) if op != "^" else prec, True)
            text = f"{left} {op} {right}"
        if prec < parent_prec or (prec == parent_prec and right_side):
            return f"({text})"
        return text

    return render(expr, 0, False)


def compile_vectorized(expr):
    """Build f(x, y) -> ndarray evaluating the tree with numpy broadcasting.

    Domain violations surface as nan/inf in the output; callers that need
    strict checking wrap the result (see darcy_mixed assembly).
    """
    kind = expr[0]
    if kind == "num":
        value = expr[1]
        return lambda x, y: np.broadcast_to(np.float64(value), np.broadcast(x, y).shape).copy()
    if kind == "var":
        if expr[1] == "x":
            return lambda x, y: np.broadcast_arrays(np.asarray(x, dtype=float), y)[0].copy()
        return lambda x, y: np.broadcast_arrays(np.asarray(y, dtype=float), x)[0].copy()
    if kind == "neg":
        inner = compile_vectorized(expr[1])
        return lambda x, y: -inner(x, y)
    if kind == "bin":
        _, op, lhs, rhs = expr
        fa = compile_vectorized(lhs)
        fb = compile_vectorized(rhs)
        ufunc = {"+": np.add, "-": np.subtract, "*": np.multiply,
                 "/": np.divide, "^": np.power}[op]

        def run(x, y, ufunc=ufunc, fa=fa, fb=fb):
            with np.errstate(all="ignore"):
                return ufunc(fa(x, y), fb(x, y))

        return run
    _, fn, arg = expr
    inner = compile_vectorized(arg)
    ufunc = {"sin": np.sin, "cos": np.cos, "exp": np.exp,
             "sqrt": np.sqrt, "abs": np.abs}[fn]

    def run(x, y, ufunc=ufunc, inner=inner):
        with np.errstate(all="ignore"):
            return ufunc(inner(x, y))

    return run

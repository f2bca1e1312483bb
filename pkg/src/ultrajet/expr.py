"""A small expression language for weight functions of one variable ``t``.

Grammar (whitespace insensitive)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | 't' | '(' expr ')'
           | FUNC '(' expr (',' expr)* ')'
           | FUNC power                    # e.g. ``log t``

``^`` is right associative and binds tighter than unary minus, so
``-t^2`` is ``-(t^2)`` and ``2^3^2`` is ``2^(3^2)``.  A function written
without parentheses takes a power-level argument: ``log t^2`` is
``log(t^2)`` while ``(log t)^2`` squares the logarithm.

Expressions evaluate either on ordinary floats (:func:`evaluate`) or in a
sign/log representation (:func:`evaluate_log`) which keeps values such as
``t/(log t)^2`` at ``t = exp(5000)`` representable.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "Num", "Var", "Neg", "BinOp", "Call", "Node",
    "ExpressionSyntaxError", "ExpressionDomainError",
    "parse_expression", "to_text", "evaluate", "evaluate_log", "compile_float",
    "FUNCTIONS",
]

FUNCTIONS = {"log": 1, "exp": 1, "sqrt": 1, "max": 2, "min": 2}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]


class ExpressionSyntaxError(ValueError):
    """Raised on malformed input; ``offset`` is a byte offset into the UTF-8 text."""

    def __init__(self, text: str, char_pos: int, expected: set[str]):
        self.text = text
        self.offset = len(text[:char_pos].encode("utf-8"))
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"syntax error at offset {self.offset}: expected one of {{{exp}}}")


class ExpressionDomainError(ValueError):
    """Raised when an expression is evaluated outside its domain."""

    def __init__(self, text: str, t: float, detail: str = "not a number"):
        self.t = t
        super().__init__(f"expression {text!r} undefined at t={t!r} ({detail})")


# ---------------------------------------------------------------- tokenizer

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(text, start, {"number", "t", "function", "operator"})
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        raise ExpressionSyntaxError(self.text, self.peek()[2], set(expected))

    def expect_op(self, op):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == op:
            return self.take()
        self.fail({repr(op)})

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail({"end of input", "operator"})
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return Num(float(val))
        if kind == "name":
            if val == "t":
                self.take()
                return Var()
            if val in FUNCTIONS:
                self.take()
                return self.call(val)
            raise ExpressionSyntaxError(self.text, pos, {"t", *FUNCTIONS})
        if kind == "op" and val == "(":
            self.take()
            node = self.expr()
            self.expect_op(")")
            return node
        self.fail({"number", "t", "function", "'('"})

    def call(self, name):
        arity = FUNCTIONS[name]
        tok = self.peek()
        if not (tok[0] == "op" and tok[1] == "("):
            if arity != 1:
                self.fail({"'('"})
            return Call(name, (self.power(),))
        self.take()
        args = [self.expr()]
        while len(args) < arity:
            self.expect_op(",")
            args.append(self.expr())
        self.expect_op(")")
        return Call(name, tuple(args))


def parse_expression(text: str) -> Node:
    if not text or not text.strip():
        raise ExpressionSyntaxError(text or "", 0, {"number", "t", "function", "'('"})
    return _Parser(text).parse()


# ------------------------------------------------------------------ printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _wrap(node: Node, min_prec: int) -> str:
    s = to_text(node)
    return f"({s})" if _prec(node) < min_prec else s


def to_text(node: Node) -> str:
    """Render ``node`` so that parsing the text yields an identical tree."""
    if isinstance(node, Num):
        if not math.isfinite(node.value) or math.copysign(1.0, node.value) < 0:
            raise ValueError(f"literal {node.value!r} has no textual form")
        return repr(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, 3)
    if isinstance(node, Call):
        return f"{node.name}(" + ", ".join(to_text(a) for a in node.args) + ")"
    p = _PREC[node.op]
    if node.op == "^":
        return _wrap(node.left, 5) + "^" + _wrap(node.right, 3)
    return f"{_wrap(node.left, p)} {node.op} {_wrap(node.right, p + 1)}"


# --------------------------------------------------------- float evaluation

def compile_float(node: Node) -> Callable[[np.ndarray], np.ndarray]:
    """Compile to a closure over numpy arrays (no domain checking)."""
    if isinstance(node, Num):
        v = node.value
        return lambda t: np.full_like(t, v)
    if isinstance(node, Var):
        return lambda t: t
    if isinstance(node, Neg):
        f = compile_float(node.arg)
        return lambda t: -f(t)
    if isinstance(node, Call):
        fs = [compile_float(a) for a in node.args]
        if node.name == "log":
            g = fs[0]
            return lambda t: (lambda x: np.log(np.where(x > 0, x, np.nan)))(g(t))
        if node.name == "sqrt":
            g = fs[0]
            return lambda t: (lambda x: np.sqrt(np.where(x >= 0, x, np.nan)))(g(t))
        if node.name == "exp":
            g = fs[0]
            return lambda t: np.exp(g(t))
        if node.name == "max":
            a, b = fs
            return lambda t: np.maximum(a(t), b(t))
        a, b = fs
        return lambda t: np.minimum(a(t), b(t))
    a, b = compile_float(node.left), compile_float(node.right)
    if node.op == "+":
        return lambda t: a(t) + b(t)
    if node.op == "-":
        return lambda t: a(t) - b(t)
    if node.op == "*":
        return lambda t: a(t) * b(t)
    if node.op == "/":
        return lambda t: a(t) / b(t)
    return lambda t: np.power(a(t), b(t))


def evaluate(node: Node, t, text: str | None = None):
    """Evaluate on floats; NaN anywhere in the result raises a domain error."""
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    with np.errstate(all="ignore"):
        out = compile_float(node)(arr)
    bad = np.isnan(out)
    if bad.any():
        raise ExpressionDomainError(text or to_text(node), float(arr[np.argmax(bad)]))
    return float(out[0]) if scalar else out


# ----------------------------------------------------- sign/log evaluation
#
# A value x is carried as (s, l) with x = s * exp(l), s in {-1, 0, 1}.

def _lv_const(c, shape):
    s = np.full(shape, float(np.sign(c)))
    l = np.full(shape, math.log(abs(c)) if c != 0 else -np.inf)
    return s, l


def _lv_to_float(v):
    s, l = v
    with np.errstate(all="ignore"):
        return np.where(s == 0, 0.0, s * np.exp(l))


def _lv_from_float(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        return np.sign(x), np.where(x == 0, -np.inf, np.log(np.abs(x)))


def _lv_add(a, b):
    sa, la = a
    sb, lb = b
    with np.errstate(all="ignore"):
        hi = np.maximum(la, lb)
        lo = np.minimum(la, lb)
        big_a = la >= lb
        s_hi = np.where(big_a, sa, sb)
        s_lo = np.where(big_a, sb, sa)
        d = np.where(np.isfinite(hi), lo - hi, -np.inf)
        same = s_hi * s_lo >= 0
        l_same = hi + np.log1p(np.exp(d))
        l_diff = hi + np.log1p(-np.exp(d))
        l = np.where(same, l_same, l_diff)
        s = np.where(s_hi != 0, s_hi, s_lo)
        l = np.where(s_lo == 0, hi, l)
        l = np.where(s_hi == 0, lo, l)
        zero = np.isneginf(l) | (s == 0)
        return np.where(zero, 0.0, s), np.where(zero, -np.inf, l)


def _lv_cmp_gt(a, b):
    """Elementwise a > b."""
    (sa, la), (sb, lb) = a, b
    return (sa > sb) | ((sa == sb) & (((sa > 0) & (la > lb)) | ((sa < 0) & (la < lb))))


def _compile_log(node: Node):
    if isinstance(node, Num):
        c = node.value
        return lambda lt: _lv_const(c, lt.shape)
    if isinstance(node, Var):
        return lambda lt: (np.where(np.isneginf(lt), 0.0, 1.0), lt)
    if isinstance(node, Neg):
        f = _compile_log(node.arg)
        return lambda lt: (lambda v: (-v[0], v[1]))(f(lt))
    if isinstance(node, Call):
        fs = [_compile_log(a) for a in node.args]
        if node.name == "log":
            g = fs[0]

            def _log(lt):
                s, l = g(lt)
                l = np.where(s > 0, l, np.nan)
                return _lv_from_float(l)
            return _log
        if node.name == "sqrt":
            g = fs[0]

            def _sqrt(lt):
                s, l = g(lt)
                return np.where(s < 0, np.nan, s), np.where(s < 0, np.nan, l / 2)
            return _sqrt
        if node.name == "exp":
            g = fs[0]

            def _exp(lt):
                x = _lv_to_float(g(lt))
                return np.ones_like(x), x
            return _exp
        a, b = fs
        pick_a_if_gt = node.name == "max"

        def _mm(lt):
            va, vb = a(lt), b(lt)
            gt = _lv_cmp_gt(va, vb)
            take_a = gt if pick_a_if_gt else ~gt
            return np.where(take_a, va[0], vb[0]), np.where(take_a, va[1], vb[1])
        return _mm
    a, b = _compile_log(node.left), _compile_log(node.right)
    if node.op == "+":
        return lambda lt: _lv_add(a(lt), b(lt))
    if node.op == "-":
        return lambda lt: (lambda vb: _lv_add(a(lt), (-vb[0], vb[1])))(b(lt))
    if node.op == "*":
        def _mul(lt):
            va, vb = a(lt), b(lt)
            s = va[0] * vb[0]
            return s, np.where(s == 0, -np.inf, va[1] + vb[1])
        return _mul
    if node.op == "/":
        def _div(lt):
            va, vb = a(lt), b(lt)
            s = np.where(vb[0] == 0, np.nan, va[0] * vb[0])
            return s, np.where(va[0] == 0, -np.inf, va[1] - vb[1])
        return _div

    def _pow(lt):
        va, vb = a(lt), b(lt)
        e = _lv_to_float(vb)
        s = np.where(va[0] > 0, 1.0, np.where((va[0] == 0) & (e > 0), 0.0, np.nan))
        return s, np.where(s == 0, -np.inf, e * va[1])
    return _pow


def evaluate_log(node: Node, log_t, text: str | None = None):
    """Evaluate at ``t = exp(log_t)`` and return ``(sign, log|value|)``."""
    lt = np.atleast_1d(np.asarray(log_t, dtype=float))
    with np.errstate(all="ignore"):
        s, l = _compile_log(node)(lt)
        s = np.broadcast_to(s, lt.shape).astype(float)
        l = np.broadcast_to(l, lt.shape).astype(float)
    bad = np.isnan(s) | np.isnan(l)
    if bad.any():
        raise ExpressionDomainError(text or to_text(node), float(np.exp(lt[np.argmax(bad)])))
    return s, l

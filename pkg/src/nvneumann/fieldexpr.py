"""Tiny expression language for scalar fields on Ω̄ and ∂Ω.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' args ')' | '(' expr ')'

Variables are x, y, r, theta. The polar pair (r, theta) is measured about an
origin supplied at evaluation time (the caller uses the first component's
center). Functions: sin, cos, exp, ln, abs. Catalog: hadamard(alpha, K).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

VARIABLES = ("x", "y", "r", "theta")
FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "ln": np.log, "abs": np.abs}
CATALOG = {"hadamard": 2}


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, msg: str, position: int):
        super().__init__(f"{msg} at position {position}")
        self.position = position


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unknown identifier {name!r} at position {position}")
        self.name = name
        self.position = position


class EvaluationError(ExprError):
    pass


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


def to_string(node) -> str:
    """Canonical text; parse(to_string(e)) == e."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_string(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_string(node.left)} {node.op} {to_string(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_string(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


# --- tokenizer and parser ----------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        kind, v, pos = self.take()
        if v != value:
            what = "end of input" if kind == "end" else repr(v)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", pos)

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, v, pos = self.take()
        if kind == "num":
            return Num(float(v))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if v not in FUNCTIONS and v not in CATALOG:
                    raise UnknownIdentifierError(v, pos)
                self.take()
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                want = CATALOG.get(v, 1)
                if len(args) != want:
                    raise ExprSyntaxError(f"{v} takes {want} argument(s), got {len(args)}", pos)
                return Call(v, tuple(args))
            if v not in VARIABLES:
                raise UnknownIdentifierError(v, pos)
            return Var(v)
        if (kind, v) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(v)
        raise ExprSyntaxError(f"unexpected {what}", pos)


def parse(text: str):
    """Parse `text` into an expression tree."""
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(text)
    node = p.expr()
    kind, v, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {v!r}", pos)
    return node


# --- evaluation --------------------------------------------------------------

def _const_value(node) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg):
        return -_const_value(node.arg)
    raise EvaluationError("catalog arguments must be numeric constants")


def hadamard_series(theta, alpha: float, K: int):
    """Σ_{k=1}^{K} 2^(-kα) cos(2^k θ)."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    for k in range(1, K + 1):
        out = out + 2.0 ** (-k * alpha) * np.cos(2.0**k * theta)
    return out


def _check_hadamard(alpha, K):
    if not 0 < alpha < 1:
        raise ExprError(f"hadamard alpha must lie in (0, 1), got {alpha}")
    if K != int(K) or not 1 <= K <= 24:
        raise ExprError(f"hadamard K must be an integer in [1, 24], got {K}")


def evaluate(node, pts, origin=(0.0, 0.0)):
    """Evaluate a parsed expression at points of shape (m, 2)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x = pts[:, 0]
    y = pts[:, 1]
    dx, dy = x - origin[0], y - origin[1]
    env = {"x": x, "y": y, "r": np.hypot(dx, dy), "theta": np.arctan2(dy, dx)}

    def ev(n):
        if isinstance(n, Num):
            return np.full(len(x), n.value)
        if isinstance(n, Var):
            return env[n.name]
        if isinstance(n, Neg):
            return -ev(n.arg)
        if isinstance(n, BinOp):
            a, b = ev(n.left), ev(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            if n.op == "/":
                if np.any(b == 0):
                    raise EvaluationError("division by zero")
                return a / b
            with np.errstate(all="ignore"):
                return np.power(a, b)
        if isinstance(n, Call):
            if n.name == "hadamard":
                alpha, K = (_const_value(a) for a in n.args)
                _check_hadamard(alpha, K)
                return hadamard_series(env["theta"], alpha, int(K))
            a = ev(n.args[0])
            if n.name == "ln" and np.any(a <= 0):
                raise EvaluationError("ln of a nonpositive value")
            with np.errstate(all="ignore"):
                return FUNCTIONS[n.name](a)
        raise TypeError(f"not an expression node: {n!r}")

    out = ev(node)
    if np.any(~np.isfinite(out)):
        raise EvaluationError("expression evaluates to NaN or inf")
    return out


# --- scalar fields -----------------------------------------------------------

_FD_STEP = 1e-5


class ScalarField:
    """A deterministic evaluator points -> values with a support tag.

    `grad`, when given, maps points (m, 2) to gradients (m, 2). Otherwise
    gradients come from centered differences with step 1e-5 and the field is
    flagged via `fd_gradient`.
    """

    def __init__(self, fn: Callable, support: str = "interior", grad: Optional[Callable] = None,
                 text: Optional[str] = None):
        if support not in ("interior", "boundary"):
            raise ValueError("support must be 'interior' or 'boundary'")
        self.fn = fn
        self.support = support
        self._grad = grad
        self.text = text

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.asarray(self.fn(pts), dtype=float) * np.ones(len(pts))

    @property
    def fd_gradient(self) -> bool:
        return self._grad is None

    def gradient(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self._grad is not None:
            return np.asarray(self._grad(pts), dtype=float)
        h = _FD_STEP
        ex = np.array([h, 0.0])
        ey = np.array([0.0, h])
        gx = (self(pts + ex) - self(pts - ex)) / (2 * h)
        gy = (self(pts + ey) - self(pts - ey)) / (2 * h)
        return np.stack([gx, gy], axis=-1)

    def is_zero(self) -> bool:
        return getattr(self, "_zero", False)

    def __add__(self, other):
        ga, gb = self.gradient, other.gradient
        return ScalarField(lambda p: self(p) + other(p), self.support, lambda p: ga(p) + gb(p))

    def scaled(self, c: float):
        return ScalarField(lambda p: c * self(p), self.support, lambda p: c * self.gradient(p))

    def __repr__(self):
        return f"ScalarField({self.text or self.fn!r}, support={self.support!r})"


def constant(c: float, support: str = "interior") -> ScalarField:
    f = ScalarField(lambda p: np.full(len(p), float(c)), support,
                    lambda p: np.zeros((len(p), 2)), text=repr(float(c)))
    f._zero = c == 0
    return f


def from_expr(text: str, support: str = "interior", origin=(0.0, 0.0)) -> ScalarField:
    """Compile an expression string into a ScalarField."""
    node = parse(text)
    if isinstance(node, Num):
        return constant(node.value, support)
    return ScalarField(lambda p: evaluate(node, p, origin), support, text=to_string(node))


def as_field(value, support: str = "interior", origin=(0.0, 0.0)) -> ScalarField:
    """Coerce a number, expression string, callable or ScalarField."""
    if isinstance(value, ScalarField):
        return value
    if isinstance(value, (int, float)):
        return constant(value, support)
    if isinstance(value, str):
        return from_expr(value, support, origin)
    if callable(value):
        return ScalarField(value, support)
    raise TypeError(f"cannot make a field from {value!r}")


def hadamard_trace(alpha: float, K: int, center=(0.0, 0.0)) -> ScalarField:
    """Lacunary boundary datum θ -> Σ_{k≤K} 2^(-kα) cos(2^k θ) on a circle.

    Values 0 < α < 1/2 give a harmonic extension with infinite Dirichlet
    energy as K -> ∞; we accept any α in (0, 1) and 1 <= K <= 24.
    """
    _check_hadamard(alpha, K)
    K = int(K)

    def fn(p):
        return hadamard_series(np.arctan2(p[:, 1] - center[1], p[:, 0] - center[0]), alpha, K)

    return ScalarField(fn, "boundary", text=f"hadamard({alpha!r}, {K})")

"""A small expression language for the surface functions ``h(x, y)`` and ``H(x, y)``.

Grammar (lowest to highest precedence)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" ["-"] INTEGER)?
    atom   := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

Names are the variables ``x`` and ``y`` and the constants ``a`` and ``pi``.
Constants other than ``pi`` are bound at evaluation time, so one parsed tree
can be reused across a parameter sweep.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import DomainError, ParseError, UnboundConstant, UnknownIdentifier

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "coth", "exp", "ln", "sqrt")
VARIABLES = ("x", "y")
CONSTANTS = ("a", "pi")


class Expr:
    """Base class of all syntax-tree nodes."""

    __slots__ = ()

    def __str__(self):
        return pretty(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


def tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(pos, f"unexpected character {source[pos]!r}")
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source):
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def tok(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        if self.tok.text != text:
            raise ParseError(self.tok.offset, f"expected {text!r}, found {self._describe()}")
        return self.advance()

    def _describe(self):
        return "end of input" if self.tok.kind == "end" else repr(self.tok.text)

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(self.tok.offset, f"expected operator or end of input, found {self._describe()}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            node = _BINARY[op](node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            node = _BINARY[op](node, self.unary())
        return node

    def unary(self):
        if self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.tok.text == "^":
            self.advance()
            sign = 1
            if self.tok.text == "-":
                self.advance()
                sign = -1
            tok = self.tok
            if tok.kind != "num" or not re.fullmatch(r"\d+", tok.text):
                raise ParseError(tok.offset, f"expected integer exponent, found {self._describe()}")
            self.advance()
            node = Pow(node, sign * int(tok.text))
        return node

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text in VARIABLES:
                return Var(tok.text)
            if tok.text in CONSTANTS:
                return Const(tok.text)
            raise UnknownIdentifier(tok.offset, f"unknown identifier {tok.text!r}")
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(tok.offset, f"expected number, name or '(', found {self._describe()}")


def parse(source):
    """Parse expression text into an immutable syntax tree."""
    return _Parser(source).parse()


# pretty printing -----------------------------------------------------------
_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _prec(node):
    return _PREC.get(type(node), 5)


def pretty(node):
    """Render a tree as text that parses back to the same tree."""
    if isinstance(node, Num):
        v = node.value
        return repr(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    if isinstance(node, Neg):
        inner = pretty(node.arg)
        return "-" + (f"({inner})" if _prec(node.arg) < _PREC[Neg] else inner)
    if isinstance(node, Pow):
        base = pretty(node.base)
        if _prec(node.base) <= _PREC[Pow]:
            base = f"({base})"
        return f"{base}^{node.exponent}"
    p = _PREC[type(node)]
    left = pretty(node.left)
    if _prec(node.left) < p:
        left = f"({left})"
    right = pretty(node.right)
    # left-associative: a right operand of equal precedence needs parentheses
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {_SYMBOL[type(node)]} {right}"


# evaluation ----------------------------------------------------------------
def _const_value(name, bindings):
    if name in bindings:
        return float(bindings[name])
    if name == "pi":
        return math.pi
    raise UnboundConstant(name)


def eval_jet(expr, point, bindings=None):
    """Jet of ``expr`` about ``point``.

    ``point`` is either ``(x, y)`` or a full chart point ``(x, y, z, t)``; the
    result never depends on ``z`` or ``t``.
    """
    bindings = bindings or {}
    point = tuple(point)
    if len(point) == 2:
        point = point + (0.0, 0.0)
    variables = {"x": jets.jet_variable(0, point), "y": jets.jet_variable(1, point)}

    def ev(node):
        if isinstance(node, Num):
            return jets.Jet.constant(node.value, point)
        if isinstance(node, Var):
            return variables[node.name]
        if isinstance(node, Const):
            return jets.Jet.constant(_const_value(node.name, bindings), point)
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, Add):
            return ev(node.left) + ev(node.right)
        if isinstance(node, Sub):
            return ev(node.left) - ev(node.right)
        if isinstance(node, Mul):
            return ev(node.left) * ev(node.right)
        if isinstance(node, Div):
            den = ev(node.right)
            if den.value == 0:
                raise DomainError("/", 0.0, "division by zero")
            return ev(node.left) / den
        if isinstance(node, Pow):
            base = ev(node.base)
            if node.exponent < 0 and base.value == 0:
                raise DomainError("^", 0.0, "negative power of zero")
            return base ** node.exponent
        if isinstance(node, Call):
            return jets.apply(node.func, ev(node.arg))
        raise TypeError(f"not an expression node: {node!r}")

    return ev(expr)


_NUMPY_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "sinh": np.sinh, "cosh": np.cosh,
    "tanh": np.tanh, "coth": lambda v: 1 / np.tanh(v), "exp": np.exp, "ln": np.log,
    "sqrt": np.sqrt,
}


def evaluate(expr, x, y, bindings=None):
    """Plain numeric evaluation, vectorized over array arguments ``x`` and ``y``."""
    bindings = bindings or {}
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def ev(node):
        if isinstance(node, Num):
            return np.full(np.broadcast(x, y).shape, node.value)
        if isinstance(node, Var):
            return np.broadcast_to(x if node.name == "x" else y, np.broadcast(x, y).shape)
        if isinstance(node, Const):
            return np.full(np.broadcast(x, y).shape, _const_value(node.name, bindings))
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, Pow):
            return ev(node.base) ** float(node.exponent)
        if isinstance(node, Call):
            arg = ev(node.arg)
            if node.func in ("ln", "sqrt") and np.any(arg <= 0):
                raise DomainError(node.func, float(np.min(arg)))
            return _NUMPY_FUNCS[node.func](arg)
        left, right = ev(node.left), ev(node.right)
        if isinstance(node, Add):
            return left + right
        if isinstance(node, Sub):
            return left - right
        if isinstance(node, Mul):
            return left * right
        return left / right

    return ev(expr)


def as_expr(source):
    """Accept either an already parsed tree or expression text."""
    return source if isinstance(source, Expr) else parse(str(source))

"""Arithmetic expression language with exact first and second derivatives.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = primary , [ "^" , unary ] ;          (* right associative *)
    primary = number | constant | variable
            | function , "(" , expr , ")" | "(" , expr , ")" ;
    function = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt"
             | "sinh" | "cosh" | "tanh" ;
    constant = "pi" | "e" ;
    number  = digits , [ "." , [ digits ] ] , [ exponent ]
            | "." , digits , [ exponent ] ;
    exponent = ("e" | "E") , [ "+" | "-" ] , digits ;

Evaluation propagates second-order jets (value, gradient, Hessian) through the
tree, so derivatives are exact up to rounding.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .exceptions import ExpressionDomainError, ParseError, UnknownIdentifierError

MAX_DEPTH = 200


class Jet2:
    """Truncated second-order Taylor value: ``value``, ``grad`` and ``hess``."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    @classmethod
    def variable(cls, value, index, n):
        g = np.zeros(n)
        g[index] = 1.0
        return cls(value, g, np.zeros((n, n)))

    @classmethod
    def constant(cls, value, n):
        return cls(value, np.zeros(n), np.zeros((n, n)))

    @property
    def dim(self):
        return self.grad.shape[0]

    def __repr__(self):
        return f"Jet2(value={self.value!r}, grad={self.grad.tolist()!r}, hess={self.hess.tolist()!r})"

    def _lift(self, other):
        if isinstance(other, Jet2):
            if other.dim != self.dim:
                raise ValueError("jet dimensions differ")
            return other
        return Jet2(other, np.zeros(self.dim), np.zeros((self.dim, self.dim)))

    def __add__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.value + other, self.grad, self.hess)
        o = self._lift(other)
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            c = float(other)
            return Jet2(self.value * c, self.grad * c, self.hess * c)
        o = self._lift(other)
        cross = np.outer(self.grad, o.grad)
        return Jet2(
            self.value * o.value,
            self.value * o.grad + o.value * self.grad,
            self.value * o.hess + o.value * self.hess + cross + cross.T,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        x = self.value
        if x == 0.0:
            raise ExpressionDomainError("division by zero")
        return self.apply(1.0 / x, -1.0 / x**2, 2.0 / x**3)

    def __truediv__(self, other):
        if not isinstance(other, Jet2):
            if other == 0:
                raise ExpressionDomainError("division by zero")
            return self * (1.0 / other)
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def apply(self, f0, f1, f2):
        """Compose with a scalar function given its value and first two derivatives."""
        return Jet2(f0, f1 * self.grad, f1 * self.hess + f2 * np.outer(self.grad, self.grad))

    def ipow(self, k: int):
        x = self.value
        if k == 0:
            return Jet2.constant(1.0, self.dim)
        if x == 0.0 and k < 0:
            raise ExpressionDomainError("division by zero")
        # skip the derivative slots whose coefficient vanishes: x ** (k - 2)
        # may overflow for tiny x even though it is multiplied by zero
        d1 = k * x ** (k - 1) if k != 1 else 1.0
        d2 = k * (k - 1) * x ** (k - 2) if k not in (1, 2) else (2.0 if k == 2 else 0.0)
        return self.apply(x**k, d1, d2)

    def rpow(self, a: float):
        x = self.value
        if x <= 0.0:
            raise ExpressionDomainError("non-integer power of a non-positive base")
        return self.apply(x**a, a * x ** (a - 1), a * (a - 1) * x ** (a - 2))


# --- scalar functions: value, first and second derivative ------------------


def _log_check(x):
    if x <= 0:
        raise ExpressionDomainError("log of a non-positive number")


def _sqrt_check(x):
    if x < 0:
        raise ExpressionDomainError("sqrt of a negative number")


def _tan_check(x):
    if math.cos(x) == 0.0:
        raise ExpressionDomainError("tan at a pole")


_FUNCTIONS = {
    "sin": (None, lambda x: (math.sin(x), math.cos(x), -math.sin(x))),
    "cos": (None, lambda x: (math.cos(x), -math.sin(x), -math.cos(x))),
    "tan": (_tan_check, lambda x: (math.tan(x), 1 / math.cos(x) ** 2, 2 * math.tan(x) / math.cos(x) ** 2)),
    "exp": (None, lambda x: (math.exp(x),) * 3),
    "log": (_log_check, lambda x: (math.log(x), 1 / x, -1 / x**2)),
    "sqrt": (_sqrt_check, lambda x: (math.sqrt(x), 0.5 / math.sqrt(x), -0.25 / x**1.5)),
    "sinh": (None, lambda x: (math.sinh(x), math.cosh(x), math.sinh(x))),
    "cosh": (None, lambda x: (math.cosh(x), math.sinh(x), math.cosh(x))),
    "tanh": (None, lambda x: (math.tanh(x), 1 - math.tanh(x) ** 2, -2 * math.tanh(x) * (1 - math.tanh(x) ** 2))),
}
_CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTION_NAMES = tuple(_FUNCTIONS)


def apply_function(name, x):
    """Apply a named grammar function to a float or a :class:`Jet2`."""
    check, fn = _FUNCTIONS[name]
    v = x.value if isinstance(x, Jet2) else float(x)
    if check is not None:
        check(v)
    if name == "sqrt" and v == 0.0 and isinstance(x, Jet2):
        raise ExpressionDomainError("sqrt is not differentiable at 0")
    try:
        f0, f1, f2 = fn(v)
    except OverflowError as exc:
        raise ExpressionDomainError(f"overflow in {name}") from exc
    if isinstance(x, Jet2):
        return x.apply(f0, f1, f2)
    return f0


# --- syntax tree -----------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


def to_source(node) -> str:
    """Fully parenthesized source text; parsing it reproduces ``node``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# --- parser ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(source):
    pos, tokens = 0, []
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos >= len(source):
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, variables):
        self.tokens = _tokenize(source)
        self.i = 0
        self.variables = {name: k for k, name in enumerate(variables)}
        self.depth = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, value, pos = self.take()
        if value != text or kind == "end":
            raise ParseError(f"expected {text!r}, found {value or 'end of input'!r}", pos)

    def _enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError("expression nested too deeply", self.peek()[2])

    def parse(self):
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", pos)
        return node

    def expr(self):
        self._enter()
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        self.depth -= 1
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        self._enter()
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            node = Neg(self.unary())
        else:
            node = self.power()
        self.depth -= 1
        return node

    def power(self):
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        kind, value, pos = self.take()
        if kind == "num":
            x = float(value)
            if not math.isfinite(x):
                raise ParseError(f"numeric literal {value!r} out of range", pos)
            return Num(x)
        if kind == "id":
            if value in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value in self.variables:
                return Var(value, self.variables[value])
            if value in _CONSTANTS:
                return Const(value)
            raise UnknownIdentifierError(value, pos)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {value or 'end of input'!r}", pos)


def _validate_variables(variables):
    seen = set()
    for name in variables:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise ValueError(f"invalid variable name {name!r}")
        if name in _FUNCTIONS or name in _CONSTANTS:
            raise ValueError(f"variable name {name!r} is reserved")
        if name in seen:
            raise ValueError(f"duplicate variable name {name!r}")
        seen.add(name)


def default_variables(n: int) -> tuple[str, ...]:
    return tuple(f"x{k + 1}" for k in range(n))


# --- evaluation ------------------------------------------------------------


def _has_var(node):
    if isinstance(node, Var):
        return True
    if isinstance(node, Neg):
        return _has_var(node.operand)
    if isinstance(node, BinOp):
        return _has_var(node.left) or _has_var(node.right)
    if isinstance(node, Call):
        return _has_var(node.arg)
    return False


def _power(base, exponent_node, env):
    if not _has_var(exponent_node):
        k = _evaluate(exponent_node, env)
        k = k.value if isinstance(k, Jet2) else k
        if float(k).is_integer() and abs(k) < 2**31:
            k = int(k)
            if isinstance(base, Jet2):
                return base.ipow(k)
            if base == 0.0 and k < 0:
                raise ExpressionDomainError("division by zero")
            return float(base) ** k
        if isinstance(base, Jet2):
            return base.rpow(k)
        if base <= 0.0:
            raise ExpressionDomainError("non-integer power of a non-positive base")
        return float(base) ** k
    exponent = _evaluate(exponent_node, env)
    b = base.value if isinstance(base, Jet2) else base
    if b <= 0.0:
        raise ExpressionDomainError("variable power of a non-positive base")
    return apply_function("exp", exponent * apply_function("log", base))


def _evaluate(node, env):
    try:
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Const):
            return _CONSTANTS[node.name]
        if isinstance(node, Var):
            return env[node.index]
        if isinstance(node, Neg):
            return -_evaluate(node.operand, env)
        if isinstance(node, Call):
            return apply_function(node.fn, _evaluate(node.arg, env))
        if isinstance(node, BinOp):
            if node.op == "^":
                return _power(_evaluate(node.left, env), node.right, env)
            a = _evaluate(node.left, env)
            b = _evaluate(node.right, env)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if not isinstance(b, Jet2) and b == 0:
                raise ExpressionDomainError("division by zero")
            return a / b
    except ExpressionDomainError as exc:
        if exc.subexpression is None:
            raise ExpressionDomainError(str(exc), to_source(node)) from None
        raise
    except (OverflowError, ZeroDivisionError) as exc:
        raise ExpressionDomainError(str(exc), to_source(node)) from None
    raise TypeError(f"not an expression node: {node!r}")


# --- symbolic differentiation ---------------------------------------------

_ZERO, _ONE = Num(0.0), Num(1.0)


def _is_num(node, value=None):
    return isinstance(node, Num) and (value is None or node.value == value)


def _add(a, b):
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return Neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return _ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if _is_num(a, 0.0):
        return _ZERO
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def _derive(node, index):
    if isinstance(node, (Num, Const)):
        return _ZERO
    if isinstance(node, Var):
        return _ONE if node.index == index else _ZERO
    if isinstance(node, Neg):
        d = _derive(node.operand, index)
        return _ZERO if _is_num(d, 0.0) else Neg(d)
    if isinstance(node, BinOp):
        u, v = node.left, node.right
        du = _derive(u, index)
        if node.op == "^":
            if not _has_var(v):
                # exponent is constant: d(u^c) = c u^(c-1) u'
                lowered = BinOp("^", u, BinOp("-", v, _ONE))
                return _mul(_mul(v, lowered), du)
            dv = _derive(v, index)
            inner = _add(_mul(dv, Call("log", u)), _div(_mul(v, du), u))
            return _mul(node, inner)
        dv = _derive(v, index)
        if node.op == "+":
            return _add(du, dv)
        if node.op == "-":
            return _sub(du, dv)
        if node.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        return _div(_sub(_mul(du, v), _mul(u, dv)), BinOp("^", v, Num(2.0)))
    if isinstance(node, Call):
        u = node.arg
        du = _derive(u, index)
        if _is_num(du, 0.0):
            return _ZERO
        outer = {
            "sin": lambda: Call("cos", u),
            "cos": lambda: Neg(Call("sin", u)),
            "tan": lambda: BinOp("/", _ONE, BinOp("^", Call("cos", u), Num(2.0))),
            "exp": lambda: node,
            "log": lambda: BinOp("/", _ONE, u),
            "sqrt": lambda: BinOp("/", _ONE, BinOp("*", Num(2.0), node)),
            "sinh": lambda: Call("cosh", u),
            "cosh": lambda: Call("sinh", u),
            "tanh": lambda: BinOp("-", _ONE, BinOp("^", node, Num(2.0))),
        }[node.fn]()
        return _mul(outer, du)
    raise TypeError(f"not an expression node: {node!r}")


# --- public API ------------------------------------------------------------


@dataclass(frozen=True)
class Expression:
    source: str
    ast: object
    variables: tuple

    @property
    def arity(self) -> int:
        return len(self.variables)

    def __str__(self):
        return to_source(self.ast)

    def evaluate(self, point) -> float:
        values = [float(x) for x in point]
        if len(values) != self.arity:
            raise ValueError(f"expected {self.arity} coordinates, got {len(values)}")
        return float(_evaluate(self.ast, values))

    def evaluate_on(self, values):
        """Evaluate on caller-supplied values (floats or jets of a common dimension)."""
        if len(values) != self.arity:
            raise ValueError(f"expected {self.arity} values, got {len(values)}")
        return _evaluate(self.ast, values)

    def derivative(self, index: int) -> Expression:
        node = _derive(self.ast, index)
        return Expression(to_source(node), node, self.variables)

    @property
    def is_constant(self) -> bool:
        return not _has_var(self.ast)


def parse(source: str, variables=None) -> Expression:
    variables = tuple(variables or ())
    _validate_variables(variables)
    if not isinstance(source, str):
        raise ParseError("expression source must be text")
    ast = _Parser(source, variables).parse()
    return Expression(source, ast, variables)


def eval_jet2(e: Expression, point) -> Jet2:
    x = np.asarray(point, dtype=float).ravel()
    if x.shape[0] != e.arity:
        raise ValueError(f"expected {e.arity} coordinates, got {x.shape[0]}")
    n = e.arity
    env = [Jet2.variable(x[k], k, n) for k in range(n)]
    out = _evaluate(e.ast, env)
    if not isinstance(out, Jet2):
        out = Jet2.constant(out, n)
    return out

"""Tiny arithmetic expression language in (theta, omega) with exact derivatives.

Expressions are parsed from text such as ``"3/5 + 3/40*sin(5*theta)"`` and
differentiated structurally, so catalog shapes and user supplied fields get
closed-form partial derivatives without an external algebra system.

Grammar: numbers, ``+ - * / ^`` (``**`` is accepted too), unary minus,
the functions ``sin cos tan exp log sqrt abs sgn``, the variables
``theta``/``θ`` and ``omega``/``ω`` and the constants ``pi``/``π`` and ``e``.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

VARIABLES = ("theta", "omega")
FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "sgn", "neg")
_CONSTANTS = {"pi": math.pi, "e": math.e}
_ALIASES = {"θ": "theta", "ω": "omega", "π": "pi", "^": "**"}


class ExpressionError(ValueError):
    """Raised for text outside the expression grammar."""


# -- tree -------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


Node = Const | Var | Call | BinOp

ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(node, value=None):
    return isinstance(node, Const) and (value is None or node.value == value)


# simplifying constructors keep derivative trees small

def add(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if a == b:
        return ZERO
    return BinOp("-", a, b)


def neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Call) and a.func == "neg":
        return a.arg
    return Call("neg", a)


def mul(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a, -1.0):
        return neg(b)
    if _is_const(b, -1.0):
        return neg(a)
    return BinOp("*", a, b)


def div(a, b):
    if _is_const(b, 0.0):
        raise ExpressionError("division by constant zero")
    if _is_const(a) and _is_const(b):
        return Const(a.value / b.value)
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return BinOp("/", a, b)


def power(a, b):
    if _is_const(b, 0.0):
        return ONE
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value ** b.value)
    return BinOp("^", a, b)


def call(func, arg):
    if func == "neg":
        return neg(arg)
    if _is_const(arg) and func != "sgn":
        return Const(float(_NUMPY_FUNCS[func](arg.value)))
    return Call(func, arg)


# -- parsing ----------------------------------------------------------------

_BINOPS = {ast.Add: add, ast.Sub: sub, ast.Mult: mul, ast.Div: div, ast.Pow: power}


def parse(text: str) -> Node:
    """Parse expression text into a tree."""
    src = str(text)
    for k, v in _ALIASES.items():
        src = src.replace(k, v)
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    return _convert(tree.body, text)


def _convert(node, text):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        if node.id in VARIABLES:
            return Var(node.id)
        if node.id in _CONSTANTS:
            return Const(_CONSTANTS[node.id])
        raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _convert(node.operand, text)
        return neg(inner) if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_convert(node.left, text), _convert(node.right, text))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        if node.func.id not in FUNCTIONS or node.func.id == "neg":
            raise ExpressionError(f"unknown function {node.func.id!r} in {text!r}")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        return call(node.func.id, _convert(node.args[0], text))
    raise ExpressionError(f"unsupported syntax in {text!r}")


# -- differentiation --------------------------------------------------------

def derivative(node: Node, var: str) -> Node:
    """Structural partial derivative of ``node`` with respect to ``var``."""
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.name == var else ZERO
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = derivative(a, var), derivative(b, var)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, b), mul(a, db))
        if node.op == "/":
            return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
        if node.op == "^":
            if _is_const(b):
                return mul(mul(b, power(a, Const(b.value - 1.0))), da)
            # general power: a^b (b' log a + b a'/a)
            return mul(node, add(mul(db, call("log", a)), div(mul(b, da), a)))
    if isinstance(node, Call):
        u = node.arg
        du = derivative(u, var)
        if _is_const(du, 0.0):
            return ZERO
        f = node.func
        if f == "neg":
            outer = Const(-1.0)
        elif f == "sin":
            outer = call("cos", u)
        elif f == "cos":
            outer = neg(call("sin", u))
        elif f == "tan":
            outer = add(ONE, power(call("tan", u), Const(2.0)))
        elif f == "exp":
            outer = node
        elif f == "log":
            outer = div(ONE, u)
        elif f == "sqrt":
            outer = div(Const(0.5), node)
        elif f == "abs":
            outer = call("sgn", u)
        elif f == "sgn":
            return ZERO
        else:  # pragma: no cover - guarded by the parser
            raise ExpressionError(f"no derivative rule for {f}")
        return mul(outer, du)
    raise TypeError(f"not an expression node: {node!r}")


# -- evaluation -------------------------------------------------------------

# arguments this close to zero are treated as exact zeros of abs/sgn, so a
# kink such as |cos(theta)| at theta = pi/2 is hit despite cos(pi/2) ~ 6e-17
KINK_TOL = 1e-14


def _sgn(x):
    # sgn(0) = 0: at a kink of abs the derivative is the mean of the two
    # one-sided values, which is what a centred stencil sees
    x = np.asarray(x)
    return np.where(np.abs(x) < KINK_TOL, 0.0, np.sign(x))


def _abs(x):
    x = np.abs(x)
    return np.where(x < KINK_TOL, 0.0, x)


_NUMPY_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": _abs, "sgn": _sgn, "neg": np.negative,
}

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_text(node: Node, parent_prec: int = 0) -> str:
    """Render a tree back into parseable text."""
    if isinstance(node, Const):
        return repr(float(node.value)) if node.value >= 0 else f"({node.value!r})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        if node.func == "neg":
            s = "-" + to_text(node.arg, 3)
            return f"({s})" if parent_prec >= 3 else s
        return f"{node.func}({to_text(node.arg)})"
    prec = _PREC[node.op]
    right_prec = prec + 1 if node.op in "-/^" else prec
    left_prec = prec + 1 if node.op == "^" else prec
    s = f"{to_text(node.left, left_prec)} {node.op} {to_text(node.right, right_prec)}"
    return f"({s})" if prec < parent_prec or (prec == parent_prec and parent_prec) else s


def _to_python(node):
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"_f_{node.func}({_to_python(node.arg)})"
    op = "**" if node.op == "^" else node.op
    return f"({_to_python(node.left)} {op} {_to_python(node.right)})"


_EVAL_NS = {f"_f_{k}": v for k, v in _NUMPY_FUNCS.items()}


class Expr:
    """A parsed expression ``f(theta, omega)`` with cached partial derivatives.

    >>> R = Expr("3/5 + 3/40*sin(5*theta)")
    >>> float(R(np.pi / 10, 0.0))
    0.675
    """

    def __init__(self, source):
        if isinstance(source, Expr):
            source = source.node
        if isinstance(source, (int, float)):
            source = Const(float(source))
        self.node = parse(source) if isinstance(source, str) else source
        self.text = source if isinstance(source, str) else to_text(self.node)
        self._partials: dict[str, Expr] = {}

    def __repr__(self):
        return f"Expr({self.text!r})"

    def __eq__(self, other):
        return isinstance(other, Expr) and other.node == self.node

    def __hash__(self):
        return hash(self.node)

    @cached_property
    def _code(self):
        return compile(_to_python(self.node), "<expr>", "eval")

    @property
    def is_constant(self) -> bool:
        return isinstance(self.node, Const)

    def depends_on(self, var: str) -> bool:
        return not _is_const(derivative(self.node, var), 0.0)

    def d(self, var: str) -> "Expr":
        """Partial derivative with respect to ``"theta"`` or ``"omega"``."""
        if var not in VARIABLES:
            raise ExpressionError(f"unknown variable {var!r}")
        if var not in self._partials:
            self._partials[var] = Expr(derivative(self.node, var))
        return self._partials[var]

    def __call__(self, theta=0.0, omega=0.0):
        theta = np.asarray(theta, dtype=float)
        omega = np.asarray(omega, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = eval(self._code, _EVAL_NS, {"theta": theta, "omega": omega})
        shape = np.broadcast_shapes(theta.shape, omega.shape)
        return np.broadcast_to(np.asarray(val, dtype=float), shape).copy() if shape else float(val)

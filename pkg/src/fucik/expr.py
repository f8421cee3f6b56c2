"""Weight expressions: parsing, symbolic differentiation, printing and evaluation.

Grammar (no implicit multiplication)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right associative, binds tighter than unary minus
    atom   := NUMBER | 'x' | 'pi' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sin | cos | tan | exp | log | sqrt | abs

Evaluation goes through Python code generated from the tree; when that fails the
tree is walked again to name the offending subexpression.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "WeightError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ArityError",
    "DomainError",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Func",
    "Node",
    "WeightExpr",
    "parse",
    "parse_ast",
    "differentiate",
    "to_text",
    "simplify",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")


class WeightError(ValueError):
    """Base class for everything that can go wrong with a weight expression."""


class ExprSyntaxError(WeightError):
    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"syntax error at position {position}: {message}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class DomainError(WeightError):
    def __init__(self, subexpr: str, x: float, reason: str):
        self.subexpr = subexpr
        self.x = x
        self.reason = reason
        super().__init__(f"{reason} in '{subexpr}' at x={x!r}")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Func]

X = Var()
ZERO = Const(0.0)
ONE = Const(1.0)


# ---------------------------------------------------------------------------
# Tokenizer and recursive-descent parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        mt = _TOKEN_RE.match(text, pos)
        if mt is None or mt.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(bad, f"unexpected character {text[bad]!r}")
        kind = mt.lastgroup
        start = mt.start(kind)
        tokens.append((kind, mt.group(kind), start))
        pos = mt.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, val, pos = self.advance()
        if kind != "op" or val != op:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(pos, f"expected {op!r}, found {found}")

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(pos, f"unexpected token {val!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = BinOp(val, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = BinOp(val, node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, val, pos = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val == "x":
                return X
            if val == "pi":
                return Const(math.pi)
            if val in FUNCTIONS:
                nk, nv, npos = self.peek()
                if nk != "op" or nv != "(":
                    raise ArityError(npos, f"function {val!r} requires one argument in parentheses")
                self.advance()
                nk, nv, npos = self.peek()
                if nk == "op" and nv == ")":
                    raise ArityError(npos, f"function {val!r} takes 1 argument, got 0")
                arg = self.expr()
                nk, nv, npos = self.peek()
                if nk == "op" and nv == ",":
                    raise ArityError(npos, f"function {val!r} takes 1 argument, got more")
                self.expect_op(")")
                return Func(val, arg)
            raise UnknownIdentifierError(pos, f"unknown identifier {val!r}")
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(pos, f"expected a number, 'x', a function or '(', found {found}")


def parse_ast(text: str) -> Node:
    if not text or not text.strip():
        raise ExprSyntaxError(0, "empty expression")
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Simplification (constant folding plus the obvious identities)


def _is(node: Node, value: float) -> bool:
    return isinstance(node, Const) and node.value == value


def simplify(node: Node) -> Node:
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Neg):
        a = simplify(node.operand)
        if isinstance(a, Const):
            return Const(-a.value)
        if isinstance(a, Neg):
            return a.operand
        return Neg(a)
    if isinstance(node, Func):
        a = simplify(node.arg)
        if isinstance(a, Const):
            try:
                return Const(_scalar_func(node.name, a.value))
            except (ValueError, ZeroDivisionError, OverflowError):
                pass
        return Func(node.name, a)
    a = simplify(node.left)
    b = simplify(node.right)
    op = node.op
    if isinstance(a, Const) and isinstance(b, Const):
        try:
            return Const(_scalar_binop(op, a.value, b.value))
        except (ValueError, ZeroDivisionError, OverflowError):
            return BinOp(op, a, b)
    if op == "+":
        if _is(a, 0.0):
            return b
        if _is(b, 0.0):
            return a
        if isinstance(b, Neg):
            return simplify(BinOp("-", a, b.operand))
    elif op == "-":
        if _is(b, 0.0):
            return a
        if _is(a, 0.0):
            return simplify(Neg(b))
    elif op == "*":
        if _is(a, 0.0) or _is(b, 0.0):
            return ZERO
        if _is(a, 1.0):
            return b
        if _is(b, 1.0):
            return a
        if _is(a, -1.0):
            return simplify(Neg(b))
        if _is(b, -1.0):
            return simplify(Neg(a))
    elif op == "/":
        if _is(a, 0.0):
            return ZERO
        if _is(b, 1.0):
            return a
    elif op == "^":
        if _is(b, 1.0):
            return a
        if _is(b, 0.0):
            return ONE
    return BinOp(op, a, b)


# ---------------------------------------------------------------------------
# Symbolic derivative with respect to x


def _d(node: Node) -> Node:
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Neg):
        return Neg(_d(node.operand))
    if isinstance(node, Func):
        u = node.arg
        du = _d(u)
        name = node.name
        if name == "sin":
            outer = Func("cos", u)
        elif name == "cos":
            outer = Neg(Func("sin", u))
        elif name == "tan":
            outer = BinOp("+", ONE, BinOp("^", Func("tan", u), Const(2.0)))
        elif name == "exp":
            outer = Func("exp", u)
        elif name == "log":
            return BinOp("/", du, u)
        elif name == "sqrt":
            return BinOp("/", du, BinOp("*", Const(2.0), Func("sqrt", u)))
        elif name == "abs":
            outer = BinOp("/", u, Func("abs", u))
        else:  # pragma: no cover - parser rejects unknown names
            raise WeightError(f"no derivative rule for {name}")
        return BinOp("*", outer, du)
    u, v = node.left, node.right
    op = node.op
    if op in "+-":
        return BinOp(op, _d(u), _d(v))
    if op == "*":
        return BinOp("+", BinOp("*", _d(u), v), BinOp("*", u, _d(v)))
    if op == "/":
        num = BinOp("-", BinOp("*", _d(u), v), BinOp("*", u, _d(v)))
        return BinOp("/", num, BinOp("^", v, Const(2.0)))
    # power
    u_const = isinstance(simplify(u), Const)
    v_s = simplify(v)
    if isinstance(v_s, Const):
        return BinOp("*", BinOp("*", v_s, BinOp("^", u, Const(v_s.value - 1.0))), _d(u))
    if u_const:
        return BinOp("*", BinOp("*", node, Func("log", u)), _d(v))
    inner = BinOp("+", BinOp("*", _d(v), Func("log", u)), BinOp("/", BinOp("*", v, _d(u)), u))
    return BinOp("*", node, inner)


def differentiate(node: Node) -> Node:
    return simplify(_d(node))


# ---------------------------------------------------------------------------
# Canonical printer (output parses back in the same grammar)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3
_ATOM_PREC = 5


def _fmt_const(value: float) -> tuple[str, int]:
    if value == math.pi:
        return "pi", _ATOM_PREC
    if math.isinf(value) or math.isnan(value):
        raise WeightError(f"cannot print non-finite constant {value}")
    text = _num(abs(value))
    if value < 0:
        return "-" + text, _NEG_PREC
    return text, _ATOM_PREC


def _num(value: float) -> str:
    if value.is_integer() and value < 1e15:
        return str(int(value))
    return repr(value)


def _print(node: Node) -> tuple[str, int]:
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return "x", _ATOM_PREC
    if isinstance(node, Func):
        return f"{node.name}({_print(node.arg)[0]})", _ATOM_PREC
    if isinstance(node, Neg):
        s, p = _print(node.operand)
        if p < _NEG_PREC:
            s = f"({s})"
        return "-" + s, _NEG_PREC
    prec = _PREC[node.op]
    ls, lp = _print(node.left)
    rs, rp = _print(node.right)
    if node.op == "^":
        # base must be an atom; exponent may be anything at unary level or above
        if lp < _ATOM_PREC:
            ls = f"({ls})"
        if rp < _NEG_PREC:
            rs = f"({rs})"
    else:
        if lp < prec:
            ls = f"({ls})"
        # left associative: an equal-precedence right operand needs parentheses
        if rp <= prec:
            rs = f"({rs})"
        if rp == _NEG_PREC:
            rs = f"({rs})"
    return f"{ls}{node.op}{rs}", prec


def to_text(node: Node) -> str:
    return _print(node)[0]


# ---------------------------------------------------------------------------
# Evaluation


def _pow_scalar(a: float, b: float) -> float:
    if a < 0 and b != math.floor(b):
        raise ValueError("negative base with non-integer exponent")
    if a == 0 and b < 0:
        raise ZeroDivisionError("zero to a negative power")
    return math.pow(a, b)


def _scalar_func(name: str, a: float) -> float:
    if name == "abs":
        return abs(a)
    if name in ("log", "sqrt"):
        if a < 0 or (name == "log" and a == 0):
            raise ValueError(f"{name} of non-positive argument")
    return getattr(math, name)(a)


def _scalar_binop(op: str, a: float, b: float) -> float:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise ZeroDivisionError("division by zero")
        return a / b
    return _pow_scalar(a, b)


def _walk(node: Node, x: float) -> float:
    """Slow tree-walking evaluator that reports the failing subexpression."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_walk(node.operand, x)
    try:
        if isinstance(node, Func):
            val = _scalar_func(node.name, _walk(node.arg, x))
        else:
            val = _scalar_binop(node.op, _walk(node.left, x), _walk(node.right, x))
    except DomainError:
        raise
    except ZeroDivisionError as exc:
        raise DomainError(to_text(node), x, str(exc) or "division by zero") from None
    except (ValueError, OverflowError) as exc:
        raise DomainError(to_text(node), x, str(exc)) from None
    if not math.isfinite(val):
        raise DomainError(to_text(node), x, "non-finite value")
    return val


def _codegen(node: Node, lib: str) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        return f"(-{_codegen(node.operand, lib)})"
    if isinstance(node, Func):
        name = node.name
        if lib == "np" and name == "abs":
            name = "absolute"
        if lib == "math" and name == "abs":
            return f"abs({_codegen(node.arg, lib)})"
        return f"{lib}.{name}({_codegen(node.arg, lib)})"
    a = _codegen(node.left, lib)
    b = _codegen(node.right, lib)
    if node.op == "^":
        if isinstance(node.right, Const) and node.right.value == int(node.right.value) and abs(node.right.value) < 64:
            exp = int(node.right.value)
            if exp >= 0:
                return f"({a})**{exp}"
        return f"_pow({a}, {b})"
    return f"({a} {node.op} {b})"


def _pow_array(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any((a < 0) & (b != np.floor(b))):
        raise FloatingPointError("negative base with non-integer exponent")
    return np.power(a, b)


def _compile(node: Node, lib: str) -> Callable:
    src = f"lambda x: {_codegen(node, lib)}"
    env = {"math": math, "np": np, "_pow": _pow_scalar if lib == "math" else _pow_array}
    return eval(compile(src, "<weight>", "eval"), env)


class WeightExpr:
    """An analytic function of ``x`` together with its exact derivative.

    Immutable; the compiled evaluators are built once at construction.
    """

    __slots__ = ("value", "derivative", "source_text", "_f", "_df", "_fv", "_dfv")

    def __init__(self, value: Node, source_text: str | None = None):
        value = simplify(value)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "derivative", differentiate(value))
        object.__setattr__(self, "source_text", source_text if source_text is not None else to_text(value))
        object.__setattr__(self, "_f", _compile(self.value, "math"))
        object.__setattr__(self, "_df", _compile(self.derivative, "math"))
        object.__setattr__(self, "_fv", _compile(self.value, "np"))
        object.__setattr__(self, "_dfv", _compile(self.derivative, "np"))

    def __setattr__(self, name, value):
        raise AttributeError("WeightExpr is immutable")

    def __reduce__(self):
        return (WeightExpr, (self.value, self.source_text))

    def __repr__(self) -> str:
        return f"WeightExpr({self.source_text!r})"

    @property
    def is_constant(self) -> bool:
        return isinstance(self.value, Const)

    @property
    def scalar(self) -> Callable[[float], float]:
        """Fast scalar evaluator without domain diagnostics."""
        return self._f

    @property
    def scalar_derivative(self) -> Callable[[float], float]:
        return self._df

    def text(self) -> str:
        """Canonical printed form."""
        return to_text(self.value)

    def eval(self, x: float) -> float:
        return _eval_checked(self._f, self.value, x)

    def eval_derivative(self, x: float) -> float:
        return _eval_checked(self._df, self.derivative, x)

    def __call__(self, x):
        """Evaluate at a scalar or on an array of points."""
        if np.ndim(x) == 0:
            return self.eval(float(x))
        return _eval_array(self._fv, self.value, x)

    def derivative_array(self, x) -> np.ndarray:
        return _eval_array(self._dfv, self.derivative, x)


def _eval_checked(fn: Callable, node: Node, x: float) -> float:
    try:
        val = fn(x)
    except (ValueError, ZeroDivisionError, OverflowError):
        _walk(node, x)
        raise  # pragma: no cover - _walk raises first
    if not math.isfinite(val):
        _walk(node, x)
        raise DomainError(to_text(node), x, "non-finite value")  # pragma: no cover
    return float(val)


def _eval_array(fn: Callable, node: Node, x) -> np.ndarray:
    xs = np.asarray(x, dtype=float)
    try:
        with np.errstate(all="raise"):
            out = np.broadcast_to(np.asarray(fn(xs), dtype=float), xs.shape).copy()
    except (FloatingPointError, ZeroDivisionError, ValueError):
        out = np.array([_eval_checked(fn, node, float(v)) for v in xs.ravel()]).reshape(xs.shape)
    bad = ~np.isfinite(out)
    if bad.any():
        _walk(node, float(xs.ravel()[np.argmax(bad.ravel())]))
        raise DomainError(to_text(node), float(xs.ravel()[np.argmax(bad.ravel())]), "non-finite value")
    return out


def parse(text: str) -> WeightExpr:
    """Parse ``text`` into a :class:`WeightExpr` (derivative computed here).

    >>> parse("2^3^2").eval(0.0)
    512.0
    """
    return WeightExpr(parse_ast(text), text)


def constant(value: float) -> WeightExpr:
    return WeightExpr(Const(float(value)))

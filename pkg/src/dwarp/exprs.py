"""Closed-form real expressions in named variables.

Expressions are immutable, hash-consed trees: structurally equal expressions
are the same object, so compiled programs share common subexpressions for
free and derivatives can be memoised per node.

Grammar accepted by :func:`parse`::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' rational)?
    base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base

Note that ``-x^2`` parses as ``(-x)^2`` under this grammar; the printer
parenthesises accordingly.
"""
from __future__ import annotations

import math
import re
import threading
import weakref
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import vm
from ._vm_py import (
    OP_ADD,
    OP_CONST,
    OP_COS,
    OP_COSH,
    OP_DIV,
    OP_EXP,
    OP_LOG,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_SIN,
    OP_SINH,
    OP_SQRT,
    OP_SUB,
    OP_VAR,
    _run_one,
)

__all__ = [
    "FUNCTIONS",
    "DomainError",
    "Expr",
    "ExprError",
    "ParseError",
    "Program",
    "UnboundVariableError",
    "const",
    "diff",
    "evaluate",
    "fd_diff",
    "free_vars",
    "func",
    "parse",
    "substitute",
    "to_str",
    "var",
]

FUNCTIONS = ("exp", "log", "sin", "cos", "sinh", "cosh", "sqrt")


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, text: str, offset: int):
        self.text = text
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class UnboundVariableError(ExprError):
    def __init__(self, names: Iterable[str]):
        self.names = tuple(sorted(names))
        super().__init__("unbound variable(s): " + ", ".join(self.names))


class DomainError(ExprError, ArithmeticError):
    """Evaluation left the real domain (log of non-positive, 1/0, overflow, ...)."""

    def __init__(self, expr: "Expr", point: Mapping[str, float] | None = None):
        self.expr = expr
        self.point = dict(point) if point is not None else None
        where = ""
        if self.point:
            where = " at " + ", ".join(f"{k}={v:.6g}" for k, v in sorted(self.point.items()))
        super().__init__(f"domain violation evaluating {to_str(expr)}{where}")


# ---------------------------------------------------------------------------
# Nodes
# ---------------------------------------------------------------------------

_LEAVES = ("const", "var")
_BINARY = ("add", "sub", "mul", "div")
_UNARY = ("neg",) + FUNCTIONS

_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_lock = threading.Lock()


class Expr:
    """An interned expression node.  Build with the module constructors or operators."""

    __slots__ = ("kind", "args", "value", "_hash", "_free", "_diff", "_prog", "__weakref__")

    kind: str
    args: tuple["Expr", ...]
    value: object

    def __new__(cls, kind, args, value):  # internal; use _make
        self = object.__new__(cls)
        self.kind = kind
        self.args = args
        self.value = value
        self._hash = hash((kind, args, value))
        self._free = None
        self._diff = None
        self._prog = None
        return self

    def __hash__(self):
        return self._hash

    def __reduce__(self):
        return (parse, (to_str(self),))

    def __repr__(self):
        return f"Expr({to_str(self)!r})"

    def __str__(self):
        return to_str(self)

    # arithmetic sugar --------------------------------------------------------
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    @property
    def is_const(self) -> bool:
        return self.kind == "const"

    def is_number(self, x: float) -> bool:
        return self.kind == "const" and self.value == x


def _make(kind: str, args: tuple, value=None) -> Expr:
    key = (kind, args, value)
    with _lock:
        node = _table.get(key)
        if node is None:
            node = Expr(kind, args, value)
            _table[key] = node
        return node


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, Fraction)) and not isinstance(x, bool):
        return const(float(x))
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def const(x: float) -> Expr:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("constants must be finite")
    if x == 0.0:
        x = 0.0  # fold -0.0
    return _make("const", (), x)


def var(name: str) -> Expr:
    if not _IDENT_RE.fullmatch(name) or name in FUNCTIONS:
        raise ValueError(f"illegal variable name {name!r}")
    return _make("var", (), name)


ZERO = const(0.0)
ONE = const(1.0)


def _fold(kind: str, *values: float, exponent: Fraction | None = None) -> Expr | None:
    """Constant-fold with the same arithmetic as the VM; None when it would fail."""
    if kind == "pow":
        code, cs = OP_POW, [values[0], float(exponent)]
        ops, a, b = [OP_CONST, OP_POW], [0, 0], [0, 1]
    else:
        code = _OPCODE[kind]
        cs = list(values)
        ops = [OP_CONST] * len(values) + [code]
        a = list(range(len(values))) + [0]
        b = [0] * len(values) + [1 if len(values) == 2 else 0]
    slots = [0.0] * len(ops)
    if _run_one(ops, a, b, cs, [], slots) >= 0:
        return None
    return const(slots[-1])


def add(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        return _fold("add", a.value, b.value) or _make("add", (a, b))
    if a.is_number(0.0):
        return b
    if b.is_number(0.0):
        return a
    return _make("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        return _fold("sub", a.value, b.value) or _make("sub", (a, b))
    if b.is_number(0.0):
        return a
    if a.is_number(0.0):
        return neg(b)
    return _make("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        return _fold("mul", a.value, b.value) or _make("mul", (a, b))
    if a.is_number(0.0) or b.is_number(0.0):
        return ZERO
    if a.is_number(1.0):
        return b
    if b.is_number(1.0):
        return a
    if a.is_number(-1.0):
        return neg(b)
    if b.is_number(-1.0):
        return neg(a)
    return _make("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    if a.is_const and b.is_const:
        return _fold("div", a.value, b.value) or _make("div", (a, b))
    if b.is_number(1.0):
        return a
    if a.is_number(0.0) and not b.is_const:
        return ZERO
    return _make("div", (a, b))


def neg(a: Expr) -> Expr:
    if a.is_const:
        return const(-a.value)
    if a.kind == "neg":
        return a.args[0]
    return _make("neg", (a,))


def power(a: Expr, exponent) -> Expr:
    """``a ** exponent`` for a rational constant exponent."""
    if isinstance(exponent, Expr):
        if not exponent.is_const:
            raise ExprError("exponents must be rational constants")
        exponent = exponent.value
    r = Fraction(exponent).limit_denominator(10**9) if isinstance(exponent, float) else Fraction(exponent)
    if r == 0:
        return ONE
    if r == 1:
        return a
    if a.is_const:
        folded = _fold("pow", a.value, exponent=r)
        if folded is not None:
            return folded
    return _make("pow", (a,), r)


def func(name: str, a: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ExprError(f"unknown function {name!r}")
    if a.is_const:
        folded = _fold(name, a.value)
        if folded is not None:
            return folded
    return _make(name, (a,))


def exp(a):
    return func("exp", _coerce(a))


def log(a):
    return func("log", _coerce(a))


def sin(a):
    return func("sin", _coerce(a))


def cos(a):
    return func("cos", _coerce(a))


def sinh(a):
    return func("sinh", _coerce(a))


def cosh(a):
    return func("cosh", _coerce(a))


def sqrt(a):
    return func("sqrt", _coerce(a))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_SPACE_RE = re.compile(r"\s+")


class _Parser:
    def __init__(self, text: str, variables: frozenset[str] | None):
        self.text = text
        self.pos = 0
        self.variables = variables

    def error(self, message: str, offset: int | None = None):
        raise ParseError(message, self.text, self.pos if offset is None else offset)

    def skip(self):
        m = _SPACE_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str):
        if self.peek() != ch:
            found = repr(self.peek()) if self.peek() else "end of input"
            self.error(f"expected {ch!r}, found {found}")
        self.pos += 1

    def number(self) -> str:
        self.skip()
        m = _NUMBER_RE.match(self.text, self.pos)
        if not m:
            self.error("expected a number")
        self.pos = m.end()
        return m.group()

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            right = self.term()
            left = add(left, right) if op == "+" else sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            right = self.factor()
            left = mul(left, right) if op == "*" else div(left, right)
        return left

    def factor(self) -> Expr:
        base = self.base()
        if self.peek() == "^":
            self.pos += 1
            base = power(base, self.rational())
        return base

    def rational(self) -> Fraction:
        if self.peek() == "(":
            self.pos += 1
            r = self.signed()
            if self.peek() == "/":
                self.pos += 1
                start = self.pos
                d = self.signed()
                if d == 0:
                    self.error("zero denominator in exponent", start)
                r = r / d
            self.take(")")
            return r
        return self.signed()

    def signed(self) -> Fraction:
        sign = 1
        if self.peek() == "-":
            self.pos += 1
            sign = -1
        return sign * Fraction(self.number())

    def base(self) -> Expr:
        ch = self.peek()
        if not ch:
            self.error("unexpected end of input")
        if ch == "-":
            self.pos += 1
            return neg(self.base())
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self.take(")")
            return e
        if ch.isdigit() or ch == ".":
            return const(float(self.number()))
        m = _IDENT_RE.match(self.text, self.pos)
        if not m:
            self.error(f"unexpected {ch!r}")
        start = self.pos
        name = m.group()
        self.pos = m.end()
        if self.peek() == "(":
            if name not in FUNCTIONS:
                self.error(f"unknown function {name!r}", start)
            self.pos += 1
            arg = self.expr()
            self.take(")")
            return func(name, arg)
        if name in FUNCTIONS:
            self.error(f"function {name!r} needs an argument", start)
        if self.variables is not None and name not in self.variables:
            self.error(f"unknown identifier {name!r}", start)
        return var(name)


def parse(text: str, variables: Iterable[str] | None = None) -> Expr:
    """Parse ``text``; when ``variables`` is given, other identifiers are rejected."""
    allowed = frozenset(variables) if variables is not None else None
    return _Parser(text, allowed).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def _fmt_number(x: float) -> str:
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _prec(e: Expr) -> int:
    if e.kind == "const":
        return 3 if e.value < 0 else 5
    return _PREC.get(e.kind, 5)


def _fmt_exponent(r: Fraction) -> str:
    if r.denominator == 1 and r > 0:
        return str(r.numerator)
    if r.denominator == 1:
        return f"({r.numerator})"
    return f"({r.numerator}/{r.denominator})"


def to_str(e: Expr) -> str:
    """Render ``e`` so that ``parse(to_str(e))`` rebuilds the identical tree."""
    memo: dict[Expr, str] = {}

    def wrap(child: Expr, ok: bool) -> str:
        s = render(child)
        return s if ok else f"({s})"

    def render(node: Expr) -> str:
        hit = memo.get(node)
        if hit is not None:
            return hit
        k = node.kind
        if k == "const":
            s = _fmt_number(node.value)
        elif k == "var":
            s = node.value
        elif k in _BINARY:
            a, b = node.args
            p = _PREC[k]
            s = f"{wrap(a, _prec(a) >= p)} {_SYMBOL[k]} {wrap(b, _prec(b) > p)}"
        elif k == "neg":
            (a,) = node.args
            s = "-" + wrap(a, _prec(a) == 5)
        elif k == "pow":
            (a,) = node.args
            s = f"{wrap(a, _prec(a) == 5)}^{_fmt_exponent(node.value)}"
        else:
            s = f"{k}({render(node.args[0])})"
        memo[node] = s
        return s

    return render(e)


# ---------------------------------------------------------------------------
# Structural operations
# ---------------------------------------------------------------------------


def free_vars(e: Expr) -> frozenset[str]:
    if e._free is None:
        if e.kind == "var":
            e._free = frozenset((e.value,))
        elif e.kind == "const":
            e._free = frozenset()
        else:
            out: frozenset[str] = frozenset()
            for a in e.args:
                out = out | free_vars(a)
            e._free = out
    return e._free


def diff(e: Expr, v: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``v``."""
    if v not in free_vars(e):
        return ZERO
    cache = e._diff
    if cache is None:
        cache = e._diff = {}
    hit = cache.get(v)
    if hit is not None:
        return hit
    k = e.kind
    if k == "var":
        out = ONE
    elif k == "add":
        out = add(diff(e.args[0], v), diff(e.args[1], v))
    elif k == "sub":
        out = sub(diff(e.args[0], v), diff(e.args[1], v))
    elif k == "mul":
        a, b = e.args
        out = add(mul(diff(a, v), b), mul(a, diff(b, v)))
    elif k == "div":
        a, b = e.args
        da, db = diff(a, v), diff(b, v)
        out = sub(div(da, b), div(mul(a, db), power(b, 2)))
    elif k == "neg":
        out = neg(diff(e.args[0], v))
    elif k == "pow":
        (a,) = e.args
        r = e.value
        out = mul(mul(const(float(r)), power(a, r - 1)), diff(a, v))
    else:
        (a,) = e.args
        da = diff(a, v)
        if k == "exp":
            out = mul(e, da)
        elif k == "log":
            out = div(da, a)
        elif k == "sin":
            out = mul(func("cos", a), da)
        elif k == "cos":
            out = neg(mul(func("sin", a), da))
        elif k == "sinh":
            out = mul(func("cosh", a), da)
        elif k == "cosh":
            out = mul(func("sinh", a), da)
        elif k == "sqrt":
            out = div(da, mul(const(2.0), e))
        else:  # pragma: no cover - all kinds handled above
            raise ExprError(f"cannot differentiate {k}")
    cache[v] = out
    return out


def substitute(e: Expr, mapping: Mapping[str, Expr | float]) -> Expr:
    """Replace variables by expressions (or numbers) simultaneously."""
    repl = {k: _coerce(v) for k, v in mapping.items()}
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        if not (free_vars(node) & repl.keys()):
            return node
        hit = memo.get(node)
        if hit is not None:
            return hit
        k = node.kind
        if k == "var":
            out = repl[node.value]
        elif k in _BINARY:
            out = _BUILD[k](go(node.args[0]), go(node.args[1]))
        elif k == "neg":
            out = neg(go(node.args[0]))
        elif k == "pow":
            out = power(go(node.args[0]), node.value)
        else:
            out = func(k, go(node.args[0]))
        memo[node] = out
        return out

    return go(e)


_BUILD = {"add": add, "sub": sub, "mul": mul, "div": div}
_OPCODE = {
    "add": OP_ADD,
    "sub": OP_SUB,
    "mul": OP_MUL,
    "div": OP_DIV,
    "neg": OP_NEG,
    "pow": OP_POW,
    "exp": OP_EXP,
    "log": OP_LOG,
    "sin": OP_SIN,
    "cos": OP_COS,
    "sinh": OP_SINH,
    "cosh": OP_COSH,
    "sqrt": OP_SQRT,
}


# ---------------------------------------------------------------------------
# Compilation and evaluation
# ---------------------------------------------------------------------------


class Program:
    """A bundle of expressions compiled to one register program.

    Shared subtrees are evaluated once.  Call with a vector of variable values
    in ``variables`` order; the result has one entry per output expression.
    """

    def __init__(self, outputs: Sequence[Expr], variables: Sequence[str], backend=None):
        self.outputs = tuple(outputs)
        self.variables = tuple(variables)
        missing = set()
        for e in self.outputs:
            missing |= free_vars(e) - set(self.variables)
        if missing:
            raise UnboundVariableError(missing)
        self._backend = backend if backend is not None else vm
        var_index = {v: i for i, v in enumerate(self.variables)}
        slot: dict[Expr, int] = {}
        const_index: dict[float, int] = {}
        ops: list[int] = []
        a_ops: list[int] = []
        b_ops: list[int] = []
        consts: list[float] = []
        nodes: list[Expr] = []

        def const_slot(x: float) -> int:
            if x not in const_index:
                const_index[x] = len(consts)
                consts.append(x)
            return const_index[x]

        for root in self.outputs:
            stack = [(root, False)]
            while stack:
                node, expanded = stack.pop()
                if node in slot:
                    continue
                if not expanded and node.args:
                    stack.append((node, True))
                    for child in reversed(node.args):
                        if child not in slot:
                            stack.append((child, False))
                    continue
                k = node.kind
                if k == "const":
                    ops.append(OP_CONST)
                    a_ops.append(const_slot(node.value))
                    b_ops.append(0)
                elif k == "var":
                    ops.append(OP_VAR)
                    a_ops.append(var_index[node.value])
                    b_ops.append(0)
                elif k in _BINARY:
                    ops.append(_OPCODE[k])
                    a_ops.append(slot[node.args[0]])
                    b_ops.append(slot[node.args[1]])
                elif k == "pow":
                    ops.append(OP_POW)
                    a_ops.append(slot[node.args[0]])
                    b_ops.append(const_slot(float(node.value)))
                else:
                    ops.append(_OPCODE[k])
                    a_ops.append(slot[node.args[0]])
                    b_ops.append(0)
                slot[node] = len(ops) - 1
                nodes.append(node)

        self._nodes = nodes
        self.op = np.asarray(ops, dtype=np.int32)
        self.a = np.asarray(a_ops, dtype=np.int32)
        self.b = np.asarray(b_ops, dtype=np.int32)
        self.consts = np.asarray(consts if consts else [0.0], dtype=np.float64)
        self.outs = np.asarray([slot[e] for e in self.outputs], dtype=np.int32)
        self._slots = np.zeros(max(len(ops), 1), dtype=np.float64)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.op)

    def _raise(self, instr: int, x) -> None:
        point = dict(zip(self.variables, (float(v) for v in x)))
        raise DomainError(self._nodes[instr], point)

    def __call__(self, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (len(self.variables),):
            raise ValueError(f"expected {len(self.variables)} values, got shape {x.shape}")
        result = np.empty(len(self.outs), dtype=np.float64)
        with self._lock:
            status = self._backend.run(
                self.op, self.a, self.b, self.consts, x, self.outs, self._slots, result
            )
        if status >= 0:
            self._raise(status, x)
        return result

    def batch(self, xs) -> np.ndarray:
        xs = np.ascontiguousarray(np.atleast_2d(xs), dtype=np.float64)
        if xs.shape[1] != len(self.variables):
            raise ValueError(f"expected {len(self.variables)} columns, got {xs.shape[1]}")
        result = np.empty((xs.shape[0], len(self.outs)), dtype=np.float64)
        slots = np.zeros_like(self._slots)
        row, status = self._backend.run_batch(
            self.op, self.a, self.b, self.consts, xs, self.outs, slots, result
        )
        if status >= 0:
            self._raise(status, xs[row])
        return result

    def evaluate(self, assignment: Mapping[str, float]) -> np.ndarray:
        try:
            x = [assignment[v] for v in self.variables]
        except KeyError:
            raise UnboundVariableError(set(self.variables) - set(assignment)) from None
        return self(x)


def evaluate(e: Expr, assignment: Mapping[str, float]) -> float:
    """Evaluate ``e`` at ``assignment``; every free variable must be bound."""
    free = free_vars(e)
    missing = free - assignment.keys()
    if missing:
        raise UnboundVariableError(missing)
    prog = e._prog
    if prog is None:
        prog = e._prog = Program([e], sorted(free))
    return float(prog([assignment[v] for v in prog.variables])[0])


def fd_diff(e: Expr, v: str, assignment: Mapping[str, float], step: float = 1e-4) -> float:
    """Central finite difference of ``e`` in ``v``: the independent oracle for :func:`diff`."""
    hi = dict(assignment)
    lo = dict(assignment)
    hi[v] = assignment.get(v, 0.0) + step
    lo[v] = assignment.get(v, 0.0) - step
    if v not in free_vars(e):
        evaluate(e, hi), evaluate(e, lo)  # still surfaces domain errors
        return 0.0
    return (evaluate(e, hi) - evaluate(e, lo)) / (2.0 * step)

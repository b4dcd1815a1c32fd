"""Arithmetic expressions for user-supplied metrics, immersions and fields.

Grammar, loosest binding first::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # right-associative
    atom    := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

so ``-x^2`` is ``-(x^2)`` and ``2^-1`` is allowed.  The evaluator is
generic in the number type: floats, numpy arrays and :class:`~tgbundle.dual.Dual`
numbers all go through the same tree walk.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from . import dual
from .dual import Dual

__all__ = [
    "Pos",
    "Num",
    "Var",
    "Unary",
    "Binary",
    "Call",
    "Expression",
    "ExpressionError",
    "ParseError",
    "EvaluationError",
    "FUNCTIONS",
    "CONSTANTS",
    "parse",
    "pretty",
    "free_variables",
    "evaluate",
    "eval_with_duals",
    "compile_vector",
]


@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self) -> str:
        return f"line {self.line}, column {self.col}"


class ExpressionError(ValueError):
    def __init__(self, message: str, pos: Pos | None = None):
        self.message = message
        self.pos = pos
        super().__init__(f"{pos}: {message}" if pos else message)


class ParseError(ExpressionError):
    """Syntax error, unknown identifier or wrong number of arguments."""


class EvaluationError(ExpressionError):
    """Domain error while evaluating (division by zero, log of a
    non-positive number, ...)."""


# -- AST ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    pos: Pos


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expression"
    pos: Pos


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expression"
    right: "Expression"
    pos: Pos


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    pos: Pos


Expression = Union[Num, Var, Unary, Binary, Call]


FUNCTIONS: dict[str, Callable] = {
    "sin": dual.sin,
    "cos": dual.cos,
    "tan": dual.tan,
    "exp": dual.exp,
    "log": dual.log,
    "sqrt": dual.sqrt,
    "abs": dual.absolute,
}
_ARITY = {name: 1 for name in FUNCTIONS}
CONSTANTS = {"pi": math.pi}


# -- tokenizer -----------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: Pos


def _tokenize(src: str) -> list[_Tok]:
    out = []
    line, line_start, i = 1, 0, 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        pos = Pos(line, i - line_start + 1)
        if m is None:
            raise ParseError(f"unexpected character {src[i]!r}", pos)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind != "ws":
            out.append(_Tok(kind, m.group(), pos))
        i = m.end()
    out.append(_Tok("end", "", Pos(line, len(src) - line_start + 1)))
    return out


_OPERAND_START = "a number, a name, '(' or '-'"


class _Parser:
    def __init__(self, src: str, variables: set[str] | None):
        self.toks = _tokenize(src)
        self.k = 0
        self.variables = variables

    @property
    def tok(self) -> _Tok:
        return self.toks[self.k]

    def advance(self) -> _Tok:
        t = self.toks[self.k]
        self.k += 1
        return t

    def fail(self, expected: str):
        t = self.tok
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"expected {expected}, found {found}", t.pos)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.k += 1
            return True
        return False

    def parse(self) -> Expression:
        e = self.expr()
        if self.tok.kind != "end":
            self.fail("an operator or end of input")
        return e

    def expr(self):
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance()
            left = Binary(op.text, left, self.term(), op.pos)
        return left

    def term(self):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance()
            left = Binary(op.text, left, self.unary(), op.pos)
        return left

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            op = self.advance()
            return Unary("-", self.unary(), op.pos)
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            op = self.advance()
            return Binary("^", base, self.unary(), op.pos)
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text), t.pos)
        if t.kind == "name":
            self.advance()
            if self.accept("("):
                return self.call(t)
            if t.text in FUNCTIONS:
                raise ParseError(f"function {t.text!r} needs an argument list", t.pos)
            if self.variables is not None and t.text not in self.variables and t.text not in CONSTANTS:
                raise ParseError(f"unknown identifier {t.text!r}", t.pos)
            return Var(t.text, t.pos)
        if self.accept("("):
            e = self.expr()
            if not self.accept(")"):
                self.fail("')'")
            return e
        self.fail(_OPERAND_START)

    def call(self, name: _Tok):
        if name.text not in FUNCTIONS:
            raise ParseError(f"unknown function {name.text!r}", name.pos)
        args = []
        if not (self.tok.kind == "op" and self.tok.text == ")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        if not self.accept(")"):
            self.fail("',' or ')'")
        if len(args) != _ARITY[name.text]:
            raise ParseError(
                f"{name.text} takes {_ARITY[name.text]} argument(s), got {len(args)}", name.pos
            )
        return Call(name.text, tuple(args), name.pos)


def parse(src: str, variables: Iterable[str] | None = None) -> Expression:
    """Parse ``src``; when ``variables`` is given, any other free name is an error."""
    if not isinstance(src, str):
        raise ParseError(f"expression must be a string, got {type(src).__name__}")
    return _Parser(src, None if variables is None else set(variables)).parse()


# -- printing ------------------------------------------------------------------------

_LEVEL = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY, _POW, _ATOM = 3, 4, 5


def _number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _fmt(e: Expression, need: int) -> str:
    if isinstance(e, Num):
        s, level = _number(e.value), _ATOM
    elif isinstance(e, Var):
        s, level = e.name, _ATOM
    elif isinstance(e, Call):
        s, level = f"{e.func}({', '.join(_fmt(a, 0) for a in e.args)})", _ATOM
    elif isinstance(e, Unary):
        s, level = "-" + _fmt(e.operand, _UNARY), _UNARY
    elif e.op == "^":
        s, level = f"{_fmt(e.left, _ATOM)}^{_fmt(e.right, _UNARY)}", _POW
    else:
        level = _LEVEL[e.op]
        s = f"{_fmt(e.left, level)} {e.op} {_fmt(e.right, level + 1)}"
    return f"({s})" if level < need else s


def pretty(e: Expression) -> str:
    """Canonical text with the fewest parentheses that parse back to ``e``."""
    return _fmt(e, 0)


def free_variables(e: Expression) -> set[str]:
    if isinstance(e, Var):
        return set() if e.name in CONSTANTS else {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, Unary):
        return free_variables(e.operand)
    if isinstance(e, Binary):
        return free_variables(e.left) | free_variables(e.right)
    return set().union(*(free_variables(a) for a in e.args))


# -- evaluation ----------------------------------------------------------------------

def _values(x) -> np.ndarray:
    return np.asarray(dual.value_of(x), dtype=float)


def _pow(base, ex, pos):
    b = _values(base)
    if isinstance(ex, Dual):
        if np.any(b <= 0):
            raise EvaluationError("power with a variable exponent needs a positive base", pos)
        return dual.exp(ex * dual.log(base))
    k = _values(ex)
    if k.ndim:
        if np.any(b <= 0):
            raise EvaluationError("power with an array exponent needs a positive base", pos)
        return dual.exp(ex * dual.log(base))
    k = float(k)
    integral = k.is_integer()
    if not integral and np.any(b < 0):
        raise EvaluationError("negative base with a non-integer exponent", pos)
    if np.any(b == 0) and (k < 0 or (isinstance(base, Dual) and not integral and k < 2)):
        raise EvaluationError("zero base with this exponent is not differentiable or finite", pos)
    if isinstance(base, Dual):
        return base ** (int(k) if integral else k)
    return np.power(b, k) if b.ndim else float(b) ** k


def _call(name, arg, pos):
    v = _values(arg)
    if name == "log" and np.any(v <= 0):
        raise EvaluationError("log of a non-positive number", pos)
    if name == "sqrt" and (np.any(v < 0) or (isinstance(arg, Dual) and np.any(v == 0))):
        raise EvaluationError("sqrt of a negative number (or of zero with derivatives)", pos)
    if name == "tan" and np.any(np.abs(np.cos(v)) < 1e-15):
        raise EvaluationError("tan at a pole", pos)
    out = FUNCTIONS[name](arg)
    return float(out) if isinstance(out, np.floating) else out


def evaluate(e: Expression, bindings: Mapping[str, object]):
    """Evaluate with the numbers in ``bindings`` (floats, arrays or duals)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name in bindings:
            return bindings[e.name]
        if e.name in CONSTANTS:
            return CONSTANTS[e.name]
        raise EvaluationError(f"no value bound to {e.name!r}", e.pos)
    if isinstance(e, Unary):
        return -evaluate(e.operand, bindings)
    if isinstance(e, Call):
        return _call(e.func, evaluate(e.args[0], bindings), e.pos)
    a = evaluate(e.left, bindings)
    b = evaluate(e.right, bindings)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if np.any(_values(b) == 0):
            raise EvaluationError("division by zero", e.pos)
        return a / b
    return _pow(a, b, e.pos)


def eval_with_duals(e: Expression, bindings: Mapping[str, float], wrt: Sequence[str] | None = None):
    """Value and gradient of ``e`` with respect to the names in ``wrt``
    (default: all bound names, in binding order)."""
    names = list(bindings) if wrt is None else list(wrt)
    missing = [v for v in names if v not in bindings]
    if missing:
        raise EvaluationError(f"no value bound to {missing[0]!r}")
    seeds = dual.variables([float(bindings[v]) for v in names], 1) if names else []
    env = dict(bindings)
    env.update(zip(names, seeds))
    out = evaluate(e, env)
    if isinstance(out, Dual):
        return float(out.val), np.asarray(out.grad, dtype=float)
    return float(out), np.zeros(len(names))


def compile_vector(exprs: Sequence[Expression], names: Sequence[str],
                   constants: Mapping[str, float] | None = None) -> Callable:
    """Callable ``args -> [value, ...]`` binding ``args[k]`` to ``names[k]``."""
    constants = dict(constants or {})
    names = list(names)

    def fn(args):
        if len(args) != len(names):
            raise ValueError(f"expected {len(names)} arguments, got {len(args)}")
        env = dict(constants)
        env.update(zip(names, args))
        return [evaluate(e, env) for e in exprs]

    return fn

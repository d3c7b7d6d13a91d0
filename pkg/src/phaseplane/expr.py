"""Expression language for oscillator right-hand sides f(x, v).

Grammar (lowest to highest binding)::

    expr   := term (('+' | '-') term)*
    term   := power (('*' | '/') power)*
    power  := unary ('^' power)?          # right associative
    unary  := '-' unary | primary
    primary:= NUMBER | 'x' | 'v' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'

Unary minus binds tighter than the base of ``^``, so ``-x^2`` is ``(-x)^2``.
There is no unary plus.

Values and exact first and second partial derivatives are obtained with
second-order dual numbers (:class:`Jet`); :func:`compile_expr` produces a
plain float callable for the hot loops of the integrators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

from .errors import DomainError, ParseError, UnknownIdentifier

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh")
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("x", "v")


# AST ==========================================================================

@dataclass(frozen=True)
class Constant:
    value: float
    name: str | None = None  # "pi" / "e" when written symbolically


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or one of FUNCTIONS
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


Expr = Union[Constant, Variable, Unary, Binary]


def variables(e: Expr) -> frozenset[str]:
    """Names of the variables occurring in ``e``."""
    if isinstance(e, Variable):
        return frozenset((e.name,))
    if isinstance(e, Unary):
        return variables(e.operand)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    return frozenset()


# Tokenizer ====================================================================

@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    offset: int
    value: float = 0.0


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        start = i
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            while i < n and source[i].isdigit():
                i += 1
            if i < n and source[i] == ".":
                i += 1
                while i < n and source[i].isdigit():
                    i += 1
            # exponent only when digits follow, so "2*e" keeps the constant e
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    while j < n and source[j].isdigit():
                        j += 1
                    i = j
            text = source[start:i]
            tokens.append(Token("num", text, _byte_offset(source, start), float(text)))
            continue
        if c.isascii() and (c.isalpha() or c == "_"):
            while i < n and source[i].isascii() and (source[i].isalnum() or source[i] == "_"):
                i += 1
            tokens.append(Token("ident", source[start:i], _byte_offset(source, start)))
            continue
        if c in "+-*/^()":
            tokens.append(Token("op", c, _byte_offset(source, start)))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", _byte_offset(source, start))
    tokens.append(Token("end", "", _byte_offset(source, n)))
    return tokens


# Parser =======================================================================

# left binding powers of the infix operators
_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_PREFIX_MINUS_BP = 40


class _Parser:
    def __init__(self, tokens: list[Token], allowed: tuple[str, ...]):
        self.tokens = tokens
        self.pos = 0
        self.allowed = allowed

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ParseError(f"expected {text!r}, found {found}", tok.offset)
        return self.advance()

    def parse(self, min_bp: int = 0) -> Expr:
        left = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _INFIX:
                return left
            lbp = _INFIX[tok.text]
            if lbp <= min_bp:
                return left
            self.advance()
            # ^ is right associative
            right = self.parse(lbp - 1 if tok.text == "^" else lbp)
            left = Binary(tok.text, left, right)

    def prefix(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Constant(tok.value)
        if tok.kind == "op" and tok.text == "-":
            return Unary("-", self.parse(_PREFIX_MINUS_BP))
        if tok.kind == "op" and tok.text == "(":
            inner = self.parse()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.parse()
                self.expect(")")
                return Unary(name, arg)
            if name in CONSTANTS:
                return Constant(CONSTANTS[name], name)
            if name in self.allowed:
                return Variable(name)
            raise UnknownIdentifier(f"unknown identifier {name!r}", tok.offset)
        if tok.kind == "end":
            raise ParseError("unexpected end of input", tok.offset)
        raise ParseError(f"unexpected {tok.text!r}", tok.offset)


def parse(source: str, variables: tuple[str, ...] = VARIABLES) -> Expr:
    """Parse ``source`` into an expression tree.

    ``variables`` restricts which of x and v may appear; anything else is
    reported as an unknown identifier.
    """
    tokens = tokenize(source)
    if tokens[0].kind == "end":
        raise ParseError("empty expression", 0)
    p = _Parser(tokens, tuple(variables))
    tree = p.parse()
    tail = p.peek()
    if tail.kind != "end":
        raise ParseError(f"unexpected {tail.text!r}", tail.offset)
    return tree


# Printer ======================================================================

def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}[e.op]
    if isinstance(e, Unary) and e.op == "-":
        return 4
    return 5


def _fmt_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_text(e: Expr) -> str:
    """Render ``e`` so that ``parse(to_text(e)) == e``."""
    if isinstance(e, Constant):
        return e.name if e.name else _fmt_number(e.value)
    if isinstance(e, Variable):
        return e.name
    if isinstance(e, Unary):
        if e.op == "-":
            inner = to_text(e.operand)
            return "-" + (inner if _prec(e.operand) >= 4 else f"({inner})")
        return f"{e.op}({to_text(e.operand)})"
    p = _prec(e)
    lt, rt = to_text(e.left), to_text(e.right)
    if e.op == "^":
        left_ok = _prec(e.left) > p
        right_ok = _prec(e.right) >= p
    else:
        left_ok = _prec(e.left) >= p
        right_ok = _prec(e.right) > p
    if not left_ok:
        lt = f"({lt})"
    if not right_ok:
        rt = f"({rt})"
    sep = "^" if e.op == "^" else f" {e.op} "
    return f"{lt}{sep}{rt}"


# Second-order dual numbers ====================================================

class Jet:
    """Value of a function of (x, v) with its first and second partials."""

    __slots__ = ("val", "dx", "dv", "dxx", "dxv", "dvv")

    def __init__(self, val, dx=0.0, dv=0.0, dxx=0.0, dxv=0.0, dvv=0.0):
        self.val = val
        self.dx = dx
        self.dv = dv
        self.dxx = dxx
        self.dxv = dxv
        self.dvv = dvv

    @property
    def is_constant(self) -> bool:
        return self.dx == 0.0 and self.dv == 0.0 and self.dxx == 0.0 \
            and self.dxv == 0.0 and self.dvv == 0.0

    def chain(self, g0: float, g1: float, g2: float) -> "Jet":
        """Compose with a scalar function g given g(u), g'(u), g''(u)."""
        return Jet(
            g0,
            g1 * self.dx,
            g1 * self.dv,
            g2 * self.dx * self.dx + g1 * self.dxx,
            g2 * self.dx * self.dv + g1 * self.dxv,
            g2 * self.dv * self.dv + g1 * self.dvv,
        )

    def __add__(self, o: "Jet") -> "Jet":
        return Jet(self.val + o.val, self.dx + o.dx, self.dv + o.dv,
                   self.dxx + o.dxx, self.dxv + o.dxv, self.dvv + o.dvv)

    def __sub__(self, o: "Jet") -> "Jet":
        return Jet(self.val - o.val, self.dx - o.dx, self.dv - o.dv,
                   self.dxx - o.dxx, self.dxv - o.dxv, self.dvv - o.dvv)

    def __neg__(self) -> "Jet":
        return Jet(-self.val, -self.dx, -self.dv, -self.dxx, -self.dxv, -self.dvv)

    def __mul__(self, o: "Jet") -> "Jet":
        a, b = self, o
        return Jet(
            a.val * b.val,
            a.dx * b.val + a.val * b.dx,
            a.dv * b.val + a.val * b.dv,
            a.dxx * b.val + 2.0 * a.dx * b.dx + a.val * b.dxx,
            a.dxv * b.val + a.dx * b.dv + a.dv * b.dx + a.val * b.dxv,
            a.dvv * b.val + 2.0 * a.dv * b.dv + a.val * b.dvv,
        )

    def reciprocal(self) -> "Jet":
        r = 1.0 / self.val
        return self.chain(r, -r * r, 2.0 * r * r * r)

    def __repr__(self) -> str:
        return (f"Jet({self.val}, dx={self.dx}, dv={self.dv}, dxx={self.dxx}, "
                f"dxv={self.dxv}, dvv={self.dvv})")


@dataclass(frozen=True)
class EvalResult:
    value: float
    d_x: float
    d_v: float
    d_xx: float
    d_xv: float
    d_vv: float


def _is_integer(value: float) -> bool:
    return math.isfinite(value) and value.is_integer()


def _int_power(base: Jet, n: int, node) -> Jet:
    if n == 0:
        return Jet(1.0)
    if n < 0:
        if base.val == 0.0:
            raise DomainError(f"zero raised to a negative power in {to_text(node)}", node)
        base = base.reciprocal()
        n = -n
    result = None
    square = base
    while n:
        if n & 1:
            result = square if result is None else result * square
        n >>= 1
        if n:
            square = square * square
    return result


def _jet_unary(op: str, u: Jet, node) -> Jet:
    a = u.val
    try:
        if op == "-":
            return -u
        if op == "sin":
            s, c = math.sin(a), math.cos(a)
            return u.chain(s, c, -s)
        if op == "cos":
            s, c = math.sin(a), math.cos(a)
            return u.chain(c, -s, -c)
        if op == "tan":
            t = math.tan(a)
            sec2 = 1.0 + t * t
            return u.chain(t, sec2, 2.0 * t * sec2)
        if op == "exp":
            ex = math.exp(a)
            return u.chain(ex, ex, ex)
        if op == "log":
            if a <= 0.0:
                raise DomainError(f"log of non-positive value {a!r} in {to_text(node)}", node)
            return u.chain(math.log(a), 1.0 / a, -1.0 / (a * a))
        if op == "sqrt":
            if a <= 0.0:
                raise DomainError(
                    f"sqrt argument {a!r} is not positive in {to_text(node)}", node)
            s = math.sqrt(a)
            return u.chain(s, 0.5 / s, -0.25 / (s * a))
        if op == "abs":
            # right derivative at 0
            sign = -1.0 if a < 0.0 else 1.0
            return u.chain(abs(a), sign, 0.0)
        if op == "tanh":
            t = math.tanh(a)
            g1 = 1.0 - t * t
            return u.chain(t, g1, -2.0 * t * g1)
    except OverflowError as exc:
        raise DomainError(f"overflow in {to_text(node)}", node) from exc
    raise AssertionError(op)


def _jet_pow(base: Jet, expo: Jet, node) -> Jet:
    if expo.is_constant:
        p = expo.val
        if _is_integer(p):
            return _int_power(base, int(p), node)
        a = base.val
        if a < 0.0:
            raise DomainError(f"non-integer power of negative base in {to_text(node)}", node)
        try:
            return base.chain(math.pow(a, p), p * math.pow(a, p - 1.0),
                              p * (p - 1.0) * math.pow(a, p - 2.0))
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"power not differentiable at base {a!r} in {to_text(node)}",
                              node) from exc
    if base.val <= 0.0:
        raise DomainError(f"variable exponent needs a positive base in {to_text(node)}", node)
    log_base = _jet_unary("log", base, node)
    return _jet_unary("exp", expo * log_base, node)


def _jet_eval(e: Expr, x: Jet, v: Jet) -> Jet:
    if isinstance(e, Constant):
        return Jet(e.value)
    if isinstance(e, Variable):
        return x if e.name == "x" else v
    if isinstance(e, Unary):
        return _jet_unary(e.op, _jet_eval(e.operand, x, v), e)
    a = _jet_eval(e.left, x, v)
    b = _jet_eval(e.right, x, v)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if b.val == 0.0:
            raise DomainError(f"division by zero in {to_text(e)}", e)
        return a * b.reciprocal()
    return _jet_pow(a, b, e)


def eval_full(e: Expr, x: float, v: float) -> EvalResult:
    """Value of ``e`` at (x, v) with all first and second partials."""
    r = _jet_eval(e, Jet(float(x), 1.0, 0.0), Jet(float(v), 0.0, 1.0))
    return EvalResult(r.val, r.dx, r.dv, r.dxx, r.dxv, r.dvv)


# Fast value-only evaluation ===================================================

def _checked_pow(a: float, b: float) -> float:
    if a < 0.0 and not _is_integer(b):
        raise ValueError("non-integer power of negative base")
    return math.pow(a, b)


def _var_pow(a: float, b: float) -> float:
    if a <= 0.0:
        raise ValueError("variable exponent needs a positive base")
    return math.pow(a, b)


def _ipow(a: float, n: int) -> float:
    if n < 0:
        return 1.0 / _ipow(a, -n)
    result = 1.0
    square = a
    while n:
        if n & 1:
            result *= square
        n >>= 1
        if n:
            square *= square
    return result


def _log(a: float) -> float:
    if a <= 0.0:
        raise ValueError("log of non-positive value")
    return math.log(a)


def _sqrt(a: float) -> float:
    if a < 0.0:
        raise ValueError("sqrt of negative value")
    return math.sqrt(a)


_NAMESPACE = {
    "_sin": math.sin, "_cos": math.cos, "_tan": math.tan, "_exp": math.exp,
    "_log": _log, "_sqrt": _sqrt, "_abs": abs, "_tanh": math.tanh,
    "_ipow": _ipow, "_pow": _checked_pow, "_vpow": _var_pow,
}


def evaluate(e: Expr, x: float, v: float) -> float:
    """Plain float evaluation; domain errors name the offending node."""
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, Variable):
        return x if e.name == "x" else v
    try:
        if isinstance(e, Unary):
            a = evaluate(e.operand, x, v)
            if e.op == "-":
                return -a
            return _NAMESPACE["_" + e.op](a)
        a = evaluate(e.left, x, v)
        b = evaluate(e.right, x, v)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return a / b
        if not variables(e.right):
            return _ipow(a, int(b)) if _is_integer(b) else _checked_pow(a, b)
        return _var_pow(a, b)
    except DomainError:
        raise
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise DomainError(f"{exc} in {to_text(e)}", e) from exc


def _codegen(e: Expr) -> str:
    if isinstance(e, Constant):
        return repr(e.value)
    if isinstance(e, Variable):
        return e.name
    if isinstance(e, Unary):
        inner = _codegen(e.operand)
        return f"(-{inner})" if e.op == "-" else f"_{e.op}({inner})"
    lt, rt = _codegen(e.left), _codegen(e.right)
    if e.op != "^":
        return f"({lt} {e.op} {rt})"
    if not variables(e.right):
        p = evaluate(e.right, 0.0, 0.0)
        if _is_integer(p):
            n = int(p)
            if n == 1:
                return lt
            if n == 2:
                return f"(lambda _a: _a * _a)({lt})"
            return f"_ipow({lt}, {n})"
        return f"_pow({lt}, {p!r})"
    return f"_vpow({lt}, {rt})"


def compile_expr(e: Expr) -> Callable[[float, float], float]:
    """Compile ``e`` into a fast ``f(x, v) -> float``.

    Raises :class:`DomainError` exactly where :func:`evaluate` would.
    """
    code = f"lambda x, v: {_codegen(e)}"
    raw = eval(code, dict(_NAMESPACE))  # noqa: S307 - code is generated from a parsed tree

    def f(x: float, v: float) -> float:
        try:
            return raw(x, v)
        except (ValueError, ZeroDivisionError, OverflowError):
            evaluate(e, x, v)  # re-raises with the offending node
            raise

    return f

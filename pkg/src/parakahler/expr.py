"""Minimal symbolic kernel: expression trees over chart coordinates.

Supports parsing, exact differentiation, conservative simplification,
IEEE-double evaluation, and a seeded sampling oracle for expression
equality.  Equality of expressions is decided numerically on random
sample points, not by canonical forms.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

SAMPLE_BOX = 2.0          # sample points drawn uniformly from [-2, 2] per coordinate
SAMPLE_REL_TOL = 1e-9
MAX_RESAMPLES = 10


class ExpressionError(Exception):
    """Base class for symbolic-kernel errors."""


class ParseError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class EvaluationError(ExpressionError):
    """Missing assignment or numeric domain error during evaluation."""


class SamplingError(ExpressionError):
    """Raised when an expression is undefined at every resampled point."""


# ---------------------------------------------------------------------------
# expression nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Expression:
    def __add__(self, other):
        return Sum((self, as_expression(other)))

    def __radd__(self, other):
        return Sum((as_expression(other), self))

    def __sub__(self, other):
        return Sum((self, -as_expression(other)))

    def __rsub__(self, other):
        return Sum((as_expression(other), -self))

    def __mul__(self, other):
        return Product((self, as_expression(other)))

    def __rmul__(self, other):
        return Product((as_expression(other), self))

    def __truediv__(self, other):
        return Quotient(self, as_expression(other))

    def __rtruediv__(self, other):
        return Quotient(as_expression(other), self)

    def __pow__(self, exponent):
        return Power(self, float(exponent))

    def __neg__(self):
        return Product((_MINUS_ONE, self))

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True)
class Const(Expression):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Var(Expression):
    kind: str     # "x" or "y"
    index: int    # 1-based

    def __post_init__(self):
        if self.kind not in ("x", "y"):
            raise ValueError(f"variable kind must be 'x' or 'y', got {self.kind!r}")
        if self.index < 1:
            raise ValueError("variable index is 1-based")

    @property
    def name(self) -> str:
        return f"{self.kind}{self.index}"


@dataclass(frozen=True)
class Sum(Expression):
    terms: tuple


@dataclass(frozen=True)
class Product(Expression):
    factors: tuple


@dataclass(frozen=True)
class Quotient(Expression):
    numerator: Expression
    denominator: Expression


@dataclass(frozen=True)
class Power(Expression):
    base: Expression
    exponent: float

    def __post_init__(self):
        object.__setattr__(self, "exponent", float(self.exponent))


@dataclass(frozen=True)
class Call(Expression):
    func: str
    arg: Expression


ZERO = Const(0.0)
ONE = Const(1.0)
_MINUS_ONE = Const(-1.0)

_FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "ln": math.log,
    "sinh": math.sinh,
    "cosh": math.cosh,
}

_NUMPY_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "sinh": np.sinh,
    "cosh": np.cosh,
}


def as_expression(value) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, float)):
        return Const(float(value))
    raise TypeError(f"cannot coerce {value!r} to an expression")


def is_zero(e: Expression) -> bool:
    return isinstance(e, Const) and e.value == 0.0


def free_variables(e: Expression) -> frozenset[Var]:
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Var):
        return frozenset((e,))
    if isinstance(e, Sum):
        return frozenset().union(*(free_variables(t) for t in e.terms))
    if isinstance(e, Product):
        return frozenset().union(*(free_variables(f) for f in e.factors))
    if isinstance(e, Quotient):
        return free_variables(e.numerator) | free_variables(e.denominator)
    if isinstance(e, Power):
        return free_variables(e.base)
    if isinstance(e, Call):
        return free_variables(e.arg)
    raise TypeError(f"unknown node {type(e).__name__}")


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------

def differentiate(e: Expression, v: Var) -> Expression:
    """Exact symbolic partial derivative of e with respect to coordinate v."""
    return simplify(_diff(e, v))


def _diff(e: Expression, v: Var) -> Expression:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e == v else ZERO
    if isinstance(e, Sum):
        return Sum(tuple(_diff(t, v) for t in e.terms))
    if isinstance(e, Product):
        terms = []
        for i, f in enumerate(e.factors):
            terms.append(Product(e.factors[:i] + (_diff(f, v),) + e.factors[i + 1:]))
        return Sum(tuple(terms))
    if isinstance(e, Quotient):
        n, d = e.numerator, e.denominator
        return Quotient(Sum((Product((_diff(n, v), d)), -Product((n, _diff(d, v))))),
                        Power(d, 2.0))
    if isinstance(e, Power):
        return Product((Const(e.exponent), Power(e.base, e.exponent - 1.0), _diff(e.base, v)))
    if isinstance(e, Call):
        inner = _diff(e.arg, v)
        if e.func == "sin":
            outer: Expression = Call("cos", e.arg)
        elif e.func == "cos":
            outer = -Call("sin", e.arg)
        elif e.func == "exp":
            outer = Call("exp", e.arg)
        elif e.func == "ln":
            outer = Quotient(ONE, e.arg)
        elif e.func == "sinh":
            outer = Call("cosh", e.arg)
        elif e.func == "cosh":
            outer = Call("sinh", e.arg)
        else:
            raise TypeError(f"unknown function {e.func!r}")
        return Product((outer, inner))
    raise TypeError(f"unknown node {type(e).__name__}")


# ---------------------------------------------------------------------------
# simplification
# ---------------------------------------------------------------------------

def simplify(e: Expression) -> Expression:
    """Constant folding, 0/1 identities, and like-term collection.

    The result is numerically equal to the input wherever the input is
    defined (dropping an annihilated factor may enlarge the domain, e.g.
    0 * ln(x1) simplifies to 0).
    """
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Sum):
        return _simplify_sum(e)
    if isinstance(e, Product):
        return _simplify_product(e)
    if isinstance(e, Quotient):
        return _simplify_quotient(e)
    if isinstance(e, Power):
        return _simplify_power(e)
    if isinstance(e, Call):
        arg = simplify(e.arg)
        if isinstance(arg, Const):
            try:
                return Const(_FUNCTIONS[e.func](arg.value))
            except ValueError:
                pass
        return Call(e.func, arg)
    raise TypeError(f"unknown node {type(e).__name__}")


def _split_coefficient(e: Expression):
    """Split a simplified term into (numeric coefficient, residual factor)."""
    if isinstance(e, Const):
        return e.value, None
    if isinstance(e, Product) and e.factors and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        residual = rest[0] if len(rest) == 1 else Product(rest)
        return e.factors[0].value, residual
    return 1.0, e


def _scale(c: float, e: Expression | None) -> Expression:
    if e is None:
        return Const(c)
    if c == 0.0:
        return ZERO
    if c == 1.0:
        return e
    if isinstance(e, Product):
        return Product((Const(c),) + e.factors)
    return Product((Const(c), e))


def _sort_key(e: Expression):
    if isinstance(e, Var):
        return (0, e.kind, e.index, "")
    if isinstance(e, Power) and isinstance(e.base, Var):
        return (0, e.base.kind, e.base.index, to_source(e))
    return (1, "", 0, to_source(e))


def _simplify_sum(e: Sum) -> Expression:
    constant = 0.0
    collected: dict[Expression, float] = {}
    order: list[Expression] = []

    def absorb(term: Expression):
        nonlocal constant
        if isinstance(term, Sum):
            for t in term.terms:
                absorb(t)
            return
        coeff, residual = _split_coefficient(term)
        if residual is None:
            constant += coeff
            return
        if residual not in collected:
            collected[residual] = 0.0
            order.append(residual)
        collected[residual] += coeff

    for t in e.terms:
        absorb(simplify(t))

    terms = [_scale(c, r) for r in sorted(order, key=_sort_key)
             if (c := collected[r]) != 0.0]
    if constant != 0.0:
        terms.append(Const(constant))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Sum(tuple(terms))


def _simplify_product(e: Product) -> Expression:
    coeff = 1.0
    exponents: dict[Expression, float] = {}
    order: list[Expression] = []

    def absorb(factor: Expression):
        nonlocal coeff
        if isinstance(factor, Product):
            for f in factor.factors:
                absorb(f)
            return
        if isinstance(factor, Const):
            coeff *= factor.value
            return
        base, power = (factor.base, factor.exponent) if isinstance(factor, Power) else (factor, 1.0)
        if base not in exponents:
            exponents[base] = 0.0
            order.append(base)
        exponents[base] += power

    for f in e.factors:
        absorb(simplify(f))

    if coeff == 0.0:
        return ZERO
    factors = []
    for base in sorted(order, key=_sort_key):
        p = exponents[base]
        if p == 0.0:
            continue
        factors.append(base if p == 1.0 else _simplify_power(Power(base, p)))
    if not factors:
        return Const(coeff)
    if coeff != 1.0:
        factors.insert(0, Const(coeff))
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def _simplify_quotient(e: Quotient) -> Expression:
    numerator = simplify(e.numerator)
    denominator = simplify(e.denominator)
    if isinstance(denominator, Const):
        if denominator.value == 0.0:
            return Quotient(numerator, denominator)  # left for evaluation to report
        return simplify(_scale_const_div(numerator, denominator.value))
    if is_zero(numerator):
        return ZERO
    if numerator == denominator:
        return ONE
    return Quotient(numerator, denominator)


def _scale_const_div(numerator: Expression, d: float) -> Expression:
    if isinstance(numerator, Const):
        return Const(numerator.value / d)
    return _scale(1.0 / d, numerator)


def _simplify_power(e: Power) -> Expression:
    base = simplify(e.base) if not isinstance(e.base, (Const, Var)) else e.base
    p = e.exponent
    if p == 0.0:
        return ONE
    if p == 1.0:
        return base
    if isinstance(base, Const):
        try:
            return Const(_pow_value(base.value, p))
        except EvaluationError:
            pass
    if isinstance(base, Power) and float(base.exponent).is_integer() and float(p).is_integer():
        return Power(base.base, base.exponent * p)
    return Power(base, p)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _pow_value(b: float, p: float) -> float:
    if float(p).is_integer():
        if b == 0.0 and p < 0.0:
            raise EvaluationError("zero base with negative exponent")
        return float(b) ** int(p)
    if b <= 0.0:
        raise EvaluationError(f"non-integer exponent {p} requires a positive base, got {b}")
    return math.pow(b, p)


def evaluate(e: Expression, point: Mapping[str, float]) -> float:
    """Evaluate at a coordinate assignment given as {name: value}."""
    try:
        return _eval(e, point)
    except OverflowError as exc:
        raise EvaluationError(f"overflow: {exc}") from exc
    except ZeroDivisionError as exc:
        raise EvaluationError("division by zero") from exc


def _eval(e: Expression, point: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(point[e.name])
        except KeyError:
            raise EvaluationError(f"missing assignment for {e.name}") from None
    if isinstance(e, Sum):
        return sum(_eval(t, point) for t in e.terms)
    if isinstance(e, Product):
        out = 1.0
        for f in e.factors:
            out *= _eval(f, point)
        return out
    if isinstance(e, Quotient):
        d = _eval(e.denominator, point)
        if d == 0.0:
            raise EvaluationError("division by zero")
        return _eval(e.numerator, point) / d
    if isinstance(e, Power):
        return _pow_value(_eval(e.base, point), e.exponent)
    if isinstance(e, Call):
        v = _eval(e.arg, point)
        if e.func == "ln" and v <= 0.0:
            raise EvaluationError(f"ln of non-positive value {v}")
        return _FUNCTIONS[e.func](v)
    raise TypeError(f"unknown node {type(e).__name__}")


def evaluate_many(e: Expression, columns: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorized evaluation over parallel coordinate arrays."""
    with np.errstate(all="ignore"):
        out = np.asarray(_eval_np(e, columns), dtype=float)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("non-finite value in vectorized evaluation")
    return out


def _eval_np(e: Expression, columns: Mapping[str, np.ndarray]):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return columns[e.name]
        except KeyError:
            raise EvaluationError(f"missing assignment for {e.name}") from None
    if isinstance(e, Sum):
        out = _eval_np(e.terms[0], columns)
        for t in e.terms[1:]:
            out = out + _eval_np(t, columns)
        return out
    if isinstance(e, Product):
        out = _eval_np(e.factors[0], columns)
        for f in e.factors[1:]:
            out = out * _eval_np(f, columns)
        return out
    if isinstance(e, Quotient):
        return _eval_np(e.numerator, columns) / _eval_np(e.denominator, columns)
    if isinstance(e, Power):
        if float(e.exponent).is_integer():
            return _eval_np(e.base, columns) ** int(e.exponent)
        return np.power(_eval_np(e.base, columns), e.exponent)
    if isinstance(e, Call):
        return _NUMPY_FUNCTIONS[e.func](_eval_np(e.arg, columns))
    raise TypeError(f"unknown node {type(e).__name__}")


def bind(e: Expression, names: Sequence[str]) -> Callable[[Sequence[float]], float]:
    """Build a fast closure evaluating e against a state vector.

    names fixes the position of each coordinate in the state vector.
    """
    position = {name: i for i, name in enumerate(names)}

    def build(node: Expression) -> Callable[[Sequence[float]], float]:
        if isinstance(node, Const):
            v = node.value
            return lambda s: v
        if isinstance(node, Var):
            try:
                i = position[node.name]
            except KeyError:
                raise EvaluationError(f"missing assignment for {node.name}") from None
            return lambda s: s[i]
        if isinstance(node, Sum):
            fs = tuple(build(t) for t in node.terms)
            return lambda s: sum(f(s) for f in fs)
        if isinstance(node, Product):
            fs = tuple(build(f) for f in node.factors)

            def prod(s):
                out = 1.0
                for f in fs:
                    out *= f(s)
                return out

            return prod
        if isinstance(node, Quotient):
            fn, fd = build(node.numerator), build(node.denominator)
            return lambda s: fn(s) / fd(s)
        if isinstance(node, Power):
            fb, p = build(node.base), node.exponent
            if float(p).is_integer():
                ip = int(p)
                return lambda s: fb(s) ** ip
            return lambda s: math.pow(fb(s), p)
        if isinstance(node, Call):
            fa, fn = build(node.arg), _FUNCTIONS[node.func]
            return lambda s: fn(fa(s))
        raise TypeError(f"unknown node {type(node).__name__}")

    return build(e)


# ---------------------------------------------------------------------------
# sampling equality oracle
# ---------------------------------------------------------------------------

def sample_point(rng: random.Random, variables: Iterable[Var]) -> dict[str, float]:
    return {v.name: rng.uniform(-SAMPLE_BOX, SAMPLE_BOX)
            for v in sorted(variables, key=lambda v: (v.kind, v.index))}

def equal_on_samples(a: Expression, b: Expression, trials: int = 100,
                     seed: int = 0) -> bool:
    """Numeric equality oracle: |a-b| < 1e-9 * (1 + |a| + |b|) at seeded samples.

    Points are drawn uniformly from [-2, 2] per coordinate; a point where
    either side hits a domain error is redrawn, at most MAX_RESAMPLES times
    per trial.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    variables = free_variables(a) | free_variables(b)
    for _ in range(trials):
        for attempt in range(MAX_RESAMPLES + 1):
            point = sample_point(rng, variables)
            try:
                va = evaluate(a, point)
                vb = evaluate(b, point)
            except EvaluationError:
                if attempt == MAX_RESAMPLES:
                    raise SamplingError(
                        f"expressions undefined after {MAX_RESAMPLES} resamples") from None
                continue
            if abs(va - vb) >= SAMPLE_REL_TOL * (1.0 + abs(va) + abs(vb)):
                return False
            break
    return True


def is_zero_on_samples(e: Expression, trials: int = 100, seed: int = 0) -> bool:
    return equal_on_samples(e, ZERO, trials=trials, seed=seed)


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_PREC_SUM = 1
_PREC_MUL = 2
_PREC_NEG = 2.5
_PREC_POW = 3
_PREC_ATOM = 4


def _format_number(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _precedence(e: Expression) -> float:
    if isinstance(e, Const):
        return _PREC_ATOM if e.value >= 0.0 else _PREC_NEG
    if isinstance(e, (Var, Call)):
        return _PREC_ATOM
    if isinstance(e, Power):
        return _PREC_POW
    if isinstance(e, (Product, Quotient)):
        return _PREC_MUL
    return _PREC_SUM


def _print(e: Expression, parent_prec: float) -> str:
    s = _print_node(e)
    if _precedence(e) < parent_prec:
        return f"({s})"
    return s


def _print_node(e: Expression) -> str:
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Sum):
        out = _print(e.terms[0], _PREC_SUM)
        for t in e.terms[1:]:
            s = _print(t, _PREC_SUM + 0.5)
            if s.startswith("-"):
                out += f" - {s[1:]}"
            else:
                out += f" + {s}"
        return out
    if isinstance(e, Product):
        factors = e.factors
        prefix = ""
        if factors and isinstance(factors[0], Const) and factors[0].value == -1.0 and len(factors) > 1:
            prefix = "-"
            factors = factors[1:]
        if len(factors) == 1:
            return prefix + _print(factors[0], _PREC_MUL)
        return prefix + "*".join(_print(f, _PREC_MUL) for f in factors)
    if isinstance(e, Quotient):
        return f"{_print(e.numerator, _PREC_MUL)}/{_print(e.denominator, _PREC_POW)}"
    if isinstance(e, Power):
        exp = _format_number(e.exponent)
        return f"{_print(e.base, _PREC_ATOM)}^{exp}"
    if isinstance(e, Call):
        return f"{e.func}({_print(e.arg, _PREC_SUM)})"
    raise TypeError(f"unknown node {type(e).__name__}")


def to_source(e: Expression) -> str:
    """Render an expression in the input grammar; parse(to_source(e)) == e in value."""
    return _print_node(e)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN_NUMBER = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?")
_TOKEN_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_VAR_NAME = re.compile(r"^([xy])([1-9][0-9]*)$")


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(source):
        c = source[i]
        if c.isspace():
            i += 1
            continue
        m = _TOKEN_NUMBER.match(source, i)
        if m:
            tokens.append(("number", m.group(), i))
            i = m.end()
            continue
        m = _TOKEN_IDENT.match(source, i)
        if m:
            tokens.append(("ident", m.group(), i))
            i = m.end()
            continue
        if c in "+-*/^(),":
            tokens.append((c, c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, chart):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.n = chart.n

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.advance()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def parse(self) -> Expression:
        e = self.sum()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected trailing input {tok[1]!r}", tok[2])
        return e

    def sum(self) -> Expression:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            rhs = self.term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            rhs = self.unary()
            node = node * rhs if op == "*" else Quotient(node, rhs)
        return node

    def unary(self) -> Expression:
        tok = self.peek()
        if tok[0] == "-":
            self.advance()
            return -self.unary()
        if tok[0] == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.peek()[0] == "^":
            caret = self.advance()
            return Power(base, self.exponent(caret[2]))
        return base

    def exponent(self, caret_offset: int) -> float:
        # exponents must fold to a numeric constant; ^ binds tighter than
        # unary minus, but a sign directly after ^ belongs to the exponent
        sign = 1.0
        while self.peek()[0] == "-":
            self.advance()
            sign = -sign
        folded = simplify(self.power())
        if not isinstance(folded, Const):
            raise ParseError("exponent must be a numeric constant", caret_offset)
        return sign * folded.value

    def atom(self) -> Expression:
        tok = self.advance()
        kind, text, offset = tok
        if kind == "number":
            return Const(float(text))
        if kind == "(":
            e = self.sum()
            self.expect(")")
            return e
        if kind == "ident":
            if self.peek()[0] == "(":
                return self.call(text, offset)
            m = _VAR_NAME.match(text)
            if m and int(m.group(2)) <= self.n:
                return Var(m.group(1), int(m.group(2)))
            if text in _FUNCTIONS:
                raise ParseError(f"function {text!r} requires an argument list", offset)
            raise ParseError(f"unknown identifier {text!r}", offset)
        raise ParseError(f"expected an expression, found {text!r}", offset)

    def call(self, name: str, offset: int) -> Expression:
        if name not in _FUNCTIONS:
            raise ParseError(f"unknown function {name!r}", offset)
        self.expect("(")
        args = [self.sum()]
        while self.peek()[0] == ",":
            self.advance()
            args.append(self.sum())
        self.expect(")")
        if len(args) != 1:
            raise ParseError(f"{name} expects 1 argument, got {len(args)}", offset)
        return Call(name, args[0])


def parse(source: str, chart) -> Expression:
    """Parse infix source text over the chart's coordinates.

    The grammar is documented in docs/expression-grammar.md; chart only
    needs an ``n`` attribute bounding the coordinate indices.
    """
    return _Parser(source, chart).parse()

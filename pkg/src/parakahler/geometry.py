"""Charts, vector fields, differential forms, and the flat model structures.

The chart is global on R^{2n} with coordinates ordered (x1..xn, y1..yn).
The model carries the neutral metric g = dx_i (x) dy_i + dy_i (x) dx_i and
the product structure J that is +1 on x-directions and -1 on y-directions;
J* acts the same way on the coordinate differentials.  Differential forms
are stored sparsely on strictly increasing index tuples, with permutation
signs normalized at insertion.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .expr import (
    ONE,
    ZERO,
    Const,
    Expression,
    Product,
    Var,
    as_expression,
    differentiate,
    equal_on_samples,
    evaluate,
    free_variables,
    is_zero,
    simplify,
    to_source,
)


class DegreeError(ValueError):
    """A form operation was applied at an unsupported degree."""


class DimensionMismatchError(ValueError):
    """Operands live on charts of different dimension."""


# ---------------------------------------------------------------------------
# chart
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Chart:
    """Global coordinates (x1..xn, y1..yn) on R^{2n}; requires n >= 1."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("chart dimension parameter n must be >= 1")

    @property
    def dim(self) -> int:
        return 2 * self.n

    def variable(self, a: int) -> Var:
        """Coordinate variable at flat index a, x-block first."""
        if not 0 <= a < self.dim:
            raise IndexError(f"flat index {a} outside 0..{self.dim - 1}")
        if a < self.n:
            return Var("x", a + 1)
        return Var("y", a - self.n + 1)

    def variables(self) -> tuple:
        return tuple(self.variable(a) for a in range(self.dim))

    def names(self) -> tuple:
        return tuple(v.name for v in self.variables())

    def index(self, v: Var) -> int:
        if not 1 <= v.index <= self.n:
            raise IndexError(f"{v.name} outside chart with n={self.n}")
        return v.index - 1 if v.kind == "x" else self.n + v.index - 1

    def differential_name(self, a: int) -> str:
        return "d" + self.variable(a).name

    def sample_point(self, rng: random.Random, box: float = 2.0) -> dict:
        return {name: rng.uniform(-box, box) for name in self.names()}


def _require_same_chart(a, b):
    if a.chart != b.chart:
        raise DimensionMismatchError(
            f"chart mismatch: n={a.chart.n} vs n={b.chart.n}")


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VectorField:
    """Contravariant field with one Expression component per coordinate."""

    chart: Chart
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.chart.dim:
            raise DimensionMismatchError(
                f"expected {self.chart.dim} components, got {len(self.components)}")
        object.__setattr__(self, "components",
                           tuple(as_expression(c) for c in self.components))

    @staticmethod
    def basis(chart: Chart, a: int) -> "VectorField":
        return VectorField(chart, tuple(ONE if b == a else ZERO
                                        for b in range(chart.dim)))

    @staticmethod
    def constant(chart: Chart, values) -> "VectorField":
        return VectorField(chart, tuple(Const(float(v)) for v in values))

    def at(self, point: Mapping[str, float]) -> np.ndarray:
        return np.array([evaluate(c, point) for c in self.components])

    def is_zero(self) -> bool:
        return all(is_zero(simplify(c)) for c in self.components)


# ---------------------------------------------------------------------------
# differential forms
# ---------------------------------------------------------------------------

def _normalize_tuple(indices):
    """Sort an index tuple, returning (sorted tuple, permutation sign).

    Returns (None, 0) when an index repeats, which kills the term.
    """
    order = list(indices)
    sign = 1
    for i in range(1, len(order)):
        j = i
        while j > 0 and order[j - 1] > order[j]:
            order[j - 1], order[j] = order[j], order[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(order)):
        if order[i - 1] == order[i]:
            return None, 0
    return tuple(order), sign


@dataclass(frozen=True)
class DifferentialForm:
    """Degree-k form as a map from strictly increasing index tuples.

    Absent tuples are zero.  Degree 0 stores a single coefficient at the
    empty tuple.  Construct through ``make_form`` so that signs are
    normalized and zero coefficients dropped.
    """

    chart: Chart
    degree: int
    coefficients: dict = field(compare=False)

    def __post_init__(self):
        if self.degree < 0:
            raise DegreeError(f"degree {self.degree} is negative")
        if self.degree > self.chart.dim and self.coefficients:
            raise DegreeError(
                f"a nonzero form of degree {self.degree} cannot exist in "
                f"dimension {self.chart.dim}")

    def coefficient(self, indices) -> Expression:
        key, sign = _normalize_tuple(tuple(indices))
        if key is None:
            return ZERO
        value = self.coefficients.get(key, ZERO)
        return value if sign == 1 else simplify(-value)

    def terms(self):
        """Sorted (indices, coefficient) pairs with nonzero coefficients."""
        return tuple(sorted(self.coefficients.items()))

    def is_zero(self) -> bool:
        return not self.coefficients

    def add(self, other: "DifferentialForm") -> "DifferentialForm":
        _require_same_chart(self, other)
        if self.degree != other.degree:
            raise DegreeError("can only add forms of equal degree")
        merged = list(self.coefficients.items()) + list(other.coefficients.items())
        return make_form(self.chart, self.degree, merged)

    def subtract(self, other: "DifferentialForm") -> "DifferentialForm":
        return self.add(other.scale(-1.0))

    def scale(self, factor) -> "DifferentialForm":
        factor = as_expression(factor)
        return make_form(self.chart, self.degree,
                         [(k, factor * v) for k, v in self.coefficients.items()])

    def at(self, point: Mapping[str, float]) -> dict:
        return {k: evaluate(v, point) for k, v in self.coefficients.items()}

    def __str__(self):
        return form_to_text(self)


def make_form(chart: Chart, degree: int, terms: Iterable) -> DifferentialForm:
    """Build a form from (index tuple, coefficient) pairs.

    Tuples may arrive in any order; signs from sorting are absorbed into
    the coefficients, duplicates are merged, zeros dropped.
    """
    collected: dict = {}
    for indices, coefficient in terms:
        key, sign = _normalize_tuple(tuple(indices))
        if key is None:
            continue
        coefficient = as_expression(coefficient)
        if sign == -1:
            coefficient = -coefficient
        if key in collected:
            collected[key] = collected[key] + coefficient
        else:
            collected[key] = coefficient
    cleaned = {}
    for key, coefficient in collected.items():
        coefficient = simplify(coefficient)
        if not is_zero(coefficient):
            cleaned[key] = coefficient
    return DifferentialForm(chart, degree, cleaned)


def zero_form(chart: Chart, degree: int) -> DifferentialForm:
    return DifferentialForm(chart, degree, {})


def function_form(chart: Chart, f) -> DifferentialForm:
    """Wrap a scalar expression as a degree-0 form."""
    f = simplify(as_expression(f))
    return DifferentialForm(chart, 0, {} if is_zero(f) else {(): f})


def coordinate_differential(chart: Chart, a: int) -> DifferentialForm:
    return DifferentialForm(chart, 1, {(a,): ONE})


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    """Graded antisymmetric product a ^ b."""
    _require_same_chart(a, b)
    degree = a.degree + b.degree
    if degree > a.chart.dim:
        raise DegreeError(f"degree overflow: {a.degree} + {b.degree} > {a.chart.dim}")
    terms = []
    for ka, ca in a.coefficients.items():
        for kb, cb in b.coefficients.items():
            terms.append((ka + kb, ca * cb))
    return make_form(a.chart, degree, terms)


def exterior_derivative(w: DifferentialForm) -> DifferentialForm:
    """Coordinate exterior derivative; d of d is zero.

    Top-degree input yields the zero form one degree up, so closedness
    checks are uniform in the chart dimension.
    """
    chart = w.chart
    if w.degree >= chart.dim:
        return zero_form(chart, w.degree + 1)
    terms = []
    for key, coefficient in w.coefficients.items():
        for a in range(chart.dim):
            partial = differentiate(coefficient, chart.variable(a))
            if not is_zero(partial):
                terms.append(((a,) + key, partial))
    return make_form(chart, w.degree + 1, terms)


def vertical_derivative(f, chart: Chart) -> DifferentialForm:
    """The J-twisted differential of a scalar.

    Sum of (df/dx_i) dx_i minus (df/dy_i) dy_i; equals the commutator
    [i_J, d] applied to f for the model structure.
    """
    f = as_expression(f)
    terms = []
    for i in range(chart.n):
        terms.append(((i,), differentiate(f, chart.variable(i))))
        terms.append(((chart.n + i,), -differentiate(f, chart.variable(chart.n + i))))
    return make_form(chart, 1, terms)


def interior_product(X: VectorField, w: DifferentialForm) -> DifferentialForm:
    """Contraction of the first slot: (i_X w)(...) = w(X, ...)."""
    _require_same_chart(X, w)
    if w.degree < 1:
        raise DegreeError("interior product needs degree >= 1")
    terms = []
    for key, coefficient in w.coefficients.items():
        for m, idx in enumerate(key):
            component = X.components[idx]
            if is_zero(component):
                continue
            reduced = key[:m] + key[m + 1:]
            term = component * coefficient
            terms.append((reduced, term if m % 2 == 0 else -term))
    return make_form(w.chart, w.degree - 1, terms)


# ---------------------------------------------------------------------------
# metric and product structure
# ---------------------------------------------------------------------------

def _matrix_rows(chart: Chart, rows) -> tuple:
    dim = chart.dim
    rows = tuple(tuple(as_expression(e) for e in row) for row in rows)
    if len(rows) != dim or any(len(row) != dim for row in rows):
        raise DimensionMismatchError(f"expected a {dim}x{dim} matrix")
    return rows


@dataclass(frozen=True)
class Metric:
    """Symmetric (0,2)-tensor; symmetry is imposed from the upper triangle."""

    chart: Chart
    entries: tuple

    @staticmethod
    def from_rows(chart: Chart, rows) -> "Metric":
        given = _matrix_rows(chart, rows)
        dim = chart.dim
        entries = tuple(tuple(given[min(a, b)][max(a, b)] for b in range(dim))
                        for a in range(dim))
        return Metric(chart, entries)

    def entry(self, a: int, b: int) -> Expression:
        return self.entries[a][b]

    def at(self, point: Mapping[str, float]) -> np.ndarray:
        dim = self.chart.dim
        out = np.empty((dim, dim))
        for a in range(dim):
            for b in range(a, dim):
                out[a, b] = out[b, a] = evaluate(self.entries[a][b], point)
        return out

    def is_constant(self) -> bool:
        return all(not free_variables(e) for row in self.entries for e in row)


@dataclass(frozen=True)
class ProductStructure:
    """(1,1)-tensor J with J squared the identity; dual flag marks J*."""

    chart: Chart
    entries: tuple
    dual: bool = False

    @staticmethod
    def from_rows(chart: Chart, rows, dual: bool = False) -> "ProductStructure":
        return ProductStructure(chart, _matrix_rows(chart, rows), dual)

    def entry(self, a: int, b: int) -> Expression:
        return self.entries[a][b]

    def at(self, point: Mapping[str, float]) -> np.ndarray:
        dim = self.chart.dim
        return np.array([[evaluate(self.entries[a][b], point) for b in range(dim)]
                         for a in range(dim)])

    def to_dual(self) -> "ProductStructure":
        return ProductStructure(self.chart, self.entries, dual=True)

    def squares_to_identity(self) -> bool:
        """Exact check that the matrix square simplifies to the identity."""
        dim = self.chart.dim
        for a in range(dim):
            for b in range(dim):
                square = simplify(sum((self.entries[a][c] * self.entries[c][b]
                                       for c in range(dim)), start=ZERO))
                target = 1.0 if a == b else 0.0
                if not (isinstance(square, Const) and square.value == target):
                    return False
        return True


def model_metric(chart: Chart) -> Metric:
    """The flat neutral metric pairing x-directions with y-directions."""
    dim, n = chart.dim, chart.n
    rows = [[ZERO] * dim for _ in range(dim)]
    for i in range(n):
        rows[i][n + i] = ONE
        rows[n + i][i] = ONE
    return Metric.from_rows(chart, rows)


def model_product_structure(chart: Chart) -> ProductStructure:
    """Diagonal structure: +1 on the x-block, -1 on the y-block."""
    dim, n = chart.dim, chart.n
    rows = [[ZERO] * dim for _ in range(dim)]
    for i in range(n):
        rows[i][i] = ONE
        rows[n + i][n + i] = Const(-1.0)
    return ProductStructure.from_rows(chart, rows)


def model_dual_structure(chart: Chart) -> ProductStructure:
    """The action of J on coordinate differentials (same matrix, dual flag)."""
    return model_product_structure(chart).to_dual()


def metric_apply(g: Metric, X: VectorField, Y: VectorField) -> Expression:
    """Bilinear pairing g(X, Y), simplified."""
    _require_same_chart(g, X)
    _require_same_chart(g, Y)
    dim = g.chart.dim
    terms = []
    for a in range(dim):
        for b in range(dim):
            entry = g.entries[a][b]
            if is_zero(entry):
                continue
            terms.append(entry * X.components[a] * Y.components[b])
    if not terms:
        return ZERO
    return simplify(sum(terms[1:], start=terms[0]))


def j_apply(J: ProductStructure, X: VectorField) -> VectorField:
    """Componentwise matrix action of J on a vector field."""
    _require_same_chart(J, X)
    dim = J.chart.dim
    components = []
    for a in range(dim):
        acc = ZERO
        for b in range(dim):
            if is_zero(J.entries[a][b]) or is_zero(X.components[b]):
                continue
            acc = acc + J.entries[a][b] * X.components[b]
        components.append(simplify(acc))
    return VectorField(J.chart, tuple(components))


def j_dual_apply(Jd: ProductStructure, alpha: DifferentialForm) -> DifferentialForm:
    """Action on a 1-form: the new coefficient at b is sum_c J^c_b alpha_c."""
    _require_same_chart(Jd, alpha)
    if alpha.degree != 1:
        raise DegreeError("dual structure acts on 1-forms only")
    terms = []
    for (c,), coefficient in alpha.coefficients.items():
        for b in range(Jd.chart.dim):
            entry = Jd.entries[c][b]
            if is_zero(entry):
                continue
            terms.append(((b,), entry * coefficient))
    return make_form(alpha.chart, 1, terms)


def insertion_operator(J: ProductStructure, w: DifferentialForm) -> DifferentialForm:
    """Insert J into one argument slot at a time and sum (degrees 0 to 2).

    Degree 0 has no slots, so the result is zero; on 1-forms this is the
    dual action; on 2-forms it acts as a derivation over the wedge.
    """
    _require_same_chart(J, w)
    if w.degree == 0:
        return zero_form(w.chart, 0)
    if w.degree == 1:
        return j_dual_apply(J, w)
    if w.degree == 2:
        terms = []
        for (p, q), coefficient in w.coefficients.items():
            for b in range(J.chart.dim):
                if not is_zero(J.entries[p][b]):
                    terms.append(((b, q), J.entries[p][b] * coefficient))
                if not is_zero(J.entries[q][b]):
                    terms.append(((p, b), J.entries[q][b] * coefficient))
        return make_form(w.chart, 2, terms)
    raise DegreeError("insertion operator supports degrees 0 to 2 only")


def compatibility_check(g: Metric, J: ProductStructure, trials: int = 20,
                        seed: int = 0) -> bool:
    """Whether g(JX, Y) + g(X, JY) vanishes on random constant fields."""
    _require_same_chart(g, J)
    rng = random.Random(seed)
    dim = g.chart.dim
    for trial in range(trials):
        X = VectorField.constant(g.chart, [rng.uniform(-2.0, 2.0) for _ in range(dim)])
        Y = VectorField.constant(g.chart, [rng.uniform(-2.0, 2.0) for _ in range(dim)])
        residual = metric_apply(g, j_apply(J, X), Y) + metric_apply(g, X, j_apply(J, Y))
        if not equal_on_samples(residual, ZERO, trials=5, seed=seed + 101 * trial + 7):
            return False
    return True


# ---------------------------------------------------------------------------
# printing and sampling equality
# ---------------------------------------------------------------------------

def _coefficient_text(e: Expression) -> str:
    from .expr import Sum as _Sum
    text = to_source(e)
    return f"({text})" if isinstance(e, _Sum) else text


def basis_text(chart: Chart, indices) -> str:
    return "^".join(chart.differential_name(a) for a in indices)


def form_to_text(w: DifferentialForm) -> str:
    """Render as 'c · dx1^dy1 + ...'; unit coefficients are left implicit."""
    if w.is_zero():
        return "0"
    if w.degree == 0:
        return to_source(w.coefficients[()])
    rendered = ""
    for key, coefficient in w.terms():
        basis = basis_text(w.chart, key)
        text = _coefficient_text(coefficient)
        negated = text.startswith("-")
        if negated:
            text = _coefficient_text(simplify(Product((Const(-1.0), coefficient))))
        if isinstance(coefficient, Const) and abs(coefficient.value) == 1.0:
            piece = basis
        else:
            piece = f"{text} · {basis}"
        if not rendered:
            rendered = ("-" if negated else "") + piece
        else:
            rendered += (" - " if negated else " + ") + piece
    return rendered


def forms_equal_on_samples(a: DifferentialForm, b: DifferentialForm,
                           trials: int = 20, seed: int = 0) -> bool:
    """Coefficientwise sampling equality of two forms of equal degree."""
    _require_same_chart(a, b)
    if a.degree != b.degree:
        return False
    keys = set(a.coefficients) | set(b.coefficients)
    for key in sorted(keys):
        if not equal_on_samples(a.coefficient(key), b.coefficient(key),
                                trials=trials, seed=seed):
            return False
    return True

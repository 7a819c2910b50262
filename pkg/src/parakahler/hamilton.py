"""From a Hamiltonian H(x, y) to the para-Hamiltonian flow.

The Liouville 1-form is the dual twist of omega = (1/2) sum y_i dx_i
+ x_i dy_i, its negative exterior derivative is the canonical 2-form
Phi = sum dx_i ^ dy_i, and the Hamiltonian vector field Z_H solves
i_{Z_H} Phi = dH, giving the flow xdot_i = dH/dy_i, ydot_i = -dH/dx_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import (
    Const,
    Expression,
    ZERO,
    as_expression,
    differentiate,
    equal_on_samples,
    free_variables,
    is_zero,
    parse,
    simplify,
)
from .geometry import (
    Chart,
    DifferentialForm,
    VectorField,
    exterior_derivative,
    j_dual_apply,
    make_form,
    model_dual_structure,
)
from .integrate import ODESystem


@dataclass(frozen=True)
class HamiltonianSystem:
    """A Hamiltonian expression over the chart coordinates."""

    chart: Chart
    H: Expression

    def __post_init__(self):
        object.__setattr__(self, "H", as_expression(self.H))
        for v in free_variables(self.H):
            try:
                self.chart.index(v)
            except IndexError as exc:
                raise ValueError(
                    f"Hamiltonian references {v.name} outside the chart") from exc

    @staticmethod
    def from_source(source: str, chart: Chart) -> "HamiltonianSystem":
        return HamiltonianSystem(chart, parse(source, chart))


def liouville_one_form(chart: Chart) -> DifferentialForm:
    """lambda = J* omega = (1/2) sum y_i dx_i - (1/2) sum x_i dy_i."""
    half = Const(0.5)
    n = chart.n
    terms = []
    for i in range(n):
        terms.append(((i,), half * chart.variable(n + i)))
        terms.append(((n + i,), half * chart.variable(i)))
    omega = make_form(chart, 1, terms)
    return j_dual_apply(model_dual_structure(chart), omega)


def canonical_form(chart: Chart) -> DifferentialForm:
    """Phi = -d(lambda) = sum dx_i ^ dy_i; closed and non-degenerate."""
    return exterior_derivative(liouville_one_form(chart)).scale(-1.0)


def _form_matrix(phi: DifferentialForm) -> np.ndarray:
    """Antisymmetric coefficient matrix of a constant-coefficient 2-form."""
    dim = phi.chart.dim
    out = np.zeros((dim, dim))
    for (a, b), coefficient in phi.coefficients.items():
        if not isinstance(coefficient, Const):
            raise ValueError("expected constant coefficients")
        out[a, b] = coefficient.value
        out[b, a] = -coefficient.value
    return out


def hamiltonian_vector_field(H: HamiltonianSystem) -> VectorField:
    """Solve i_{Z} Phi = dH for Z, then cross-check the closed form.

    The generic route inverts the constant coefficient matrix of Phi; the
    result must agree with Z = sum dH/dy_i d/dx_i - dH/dx_i d/dy_i, and a
    disagreement means the sign conventions drifted, so it is fatal.
    """
    chart = H.chart
    dim, n = chart.dim, chart.n
    phi = canonical_form(chart)
    omega = _form_matrix(phi)
    # (i_Z Phi)_b = sum_a Z^a Omega_{ab}; solve Omega^T z = dH
    inverse = np.linalg.inv(omega.T)
    gradient = [differentiate(H.H, chart.variable(b)) for b in range(dim)]
    components = []
    for a in range(dim):
        acc = ZERO
        for b in range(dim):
            weight = inverse[a, b]
            if weight == 0.0:
                continue
            acc = acc + Const(weight) * gradient[b]
        components.append(simplify(acc))

    for i in range(n):
        direct_x = gradient[n + i]
        direct_y = simplify(-gradient[i])
        if not equal_on_samples(components[i], direct_x, trials=20, seed=11 + i):
            raise AssertionError("generic solve disagrees with the closed form")
        if not equal_on_samples(components[n + i], direct_y, trials=20, seed=37 + i):
            raise AssertionError("generic solve disagrees with the closed form")
    return VectorField(chart, tuple(components))


def hamilton_odes(H: HamiltonianSystem) -> ODESystem:
    """First-order flow xdot_i = dH/dy_i, ydot_i = -dH/dx_i."""
    field = hamiltonian_vector_field(H)
    return ODESystem(H.chart, rhs=field.components, provenance="hamiltonian")


def poisson_self_derivative(H: HamiltonianSystem) -> Expression:
    """Z_H(H), identically zero: H is a first integral of its own flow."""
    chart = H.chart
    field = hamiltonian_vector_field(H)
    acc = ZERO
    for a in range(chart.dim):
        acc = acc + field.components[a] * differentiate(H.H, chart.variable(a))
    return simplify(acc)

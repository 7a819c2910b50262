"""From a Lagrangian L(x, y) to its para-Kahler form, energy, and flow.

Pipeline: the twisted differential d_J L yields the 2-form Phi_L = -d(d_J L);
the energy is E_L = sum_i X_i dL/dx_i - Y_i dL/dy_i - L for a semispray with
components (X, Y); requiring i_xi Phi_L = dE_L reduces to the linear system

    Hess(L) (X, Y) = (dL/dx, -dL/dy)

whose solution is the semispray of the Euler-Lagrange dynamics xdot = X,
ydot = Y.  The energy differential follows the convention that the
semispray coefficients X_i, Y_i are held constant under d; only under that
convention does i_xi Phi_L = dE_L close exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import linalg
from .expr import (
    ZERO,
    Expression,
    as_expression,
    bind,
    differentiate,
    equal_on_samples,
    evaluate,
    evaluate_many,
    free_variables,
    is_zero,
    parse,
    simplify,
)
from .geometry import (
    Chart,
    DifferentialForm,
    ProductStructure,
    VectorField,
    exterior_derivative,
    j_apply,
    make_form,
    vertical_derivative,
)
from .integrate import ODESystem, Trajectory

REGULARITY_PROBES = 5
REGULARITY_TOL = 1e-12


class DegenerateLagrangianError(Exception):
    """The Hessian system is singular; carries the numeric rank found."""

    def __init__(self, rank: int, size: int):
        super().__init__(
            f"degenerate Lagrangian: Hessian rank {rank} of {size} at probe points")
        self.rank = rank
        self.size = size


@dataclass(frozen=True)
class LagrangianSystem:
    """A Lagrangian expression over the chart coordinates.

    The convention marker records that energy differentials treat the
    semispray coefficients as constants under d.
    """

    chart: Chart
    L: Expression
    convention: str = "semispray-coefficients-fixed"

    def __post_init__(self):
        object.__setattr__(self, "L", as_expression(self.L))
        for v in free_variables(self.L):
            try:
                self.chart.index(v)
            except IndexError as exc:
                raise ValueError(
                    f"Lagrangian references {v.name} outside the chart") from exc

    @staticmethod
    def from_source(source: str, chart: Chart) -> "LagrangianSystem":
        return LagrangianSystem(chart, parse(source, chart))


@dataclass(frozen=True)
class Semispray:
    """Solved vector field components (X_1..X_n, Y_1..Y_n).

    components is None for charts beyond the symbolic-solve size, in which
    case numeric(state) solves the Hessian system per point.
    """

    chart: Chart
    components: Optional[tuple]
    numeric: Optional[Callable] = None

    @property
    def is_symbolic(self) -> bool:
        return self.components is not None

    def X(self, i: int) -> Expression:
        return self.components[i - 1]

    def Y(self, i: int) -> Expression:
        return self.components[self.chart.n + i - 1]

    def as_vector_field(self) -> VectorField:
        return VectorField(self.chart, self.components)

    @staticmethod
    def from_components(chart: Chart, components) -> "Semispray":
        return Semispray(chart, tuple(as_expression(c) for c in components))


def _gradient(L: LagrangianSystem):
    chart = L.chart
    return [differentiate(L.L, chart.variable(a)) for a in range(chart.dim)]


def _hessian(L: LagrangianSystem):
    chart = L.chart
    grad = _gradient(L)
    return tuple(tuple(differentiate(grad[a], chart.variable(b))
                       for b in range(chart.dim)) for a in range(chart.dim)), grad


def _twisted_gradient(grad, n: int):
    """Right-hand side (dL/dx, -dL/dy) of the semispray system."""
    return [grad[a] if a < n else simplify(-grad[a]) for a in range(2 * n)]


def kahler_form(L: LagrangianSystem) -> DifferentialForm:
    """Phi_L = -d(d_J L), a closed 2-form, degenerate iff L is."""
    return exterior_derivative(vertical_derivative(L.L, L.chart)).scale(-1.0)


def liouville_field(xi: Semispray, J: ProductStructure) -> VectorField:
    """V = J xi: x-components preserved, y-components negated."""
    return j_apply(J, xi.as_vector_field())


def energy(L: LagrangianSystem, xi: Semispray) -> Expression:
    """E_L = sum_i X_i dL/dx_i - Y_i dL/dy_i - L, simplified."""
    chart = L.chart
    n = chart.n
    acc = -L.L
    for i in range(n):
        acc = acc + xi.components[i] * differentiate(L.L, chart.variable(i))
        acc = acc - xi.components[n + i] * differentiate(L.L, chart.variable(n + i))
    return simplify(acc)


def energy_differential(L: LagrangianSystem, xi: Semispray) -> DifferentialForm:
    """dE_L with the semispray coefficients held constant under d.

    Coefficient of dx_j: sum_i X_i L_{x_i x_j} - Y_i L_{y_i x_j} - L_{x_j},
    and the analogous expression for dy_j.  Literal differentiation of the
    substituted energy would add dX/dY terms; the fixed-coefficient
    convention is the one under which i_xi Phi_L = dE_L holds.
    """
    chart = L.chart
    dim, n = chart.dim, chart.n
    hess, grad = _hessian(L)
    terms = []
    for b in range(dim):
        acc = -grad[b]
        for i in range(n):
            acc = acc + xi.components[i] * hess[i][b]
            acc = acc - xi.components[n + i] * hess[n + i][b]
        terms.append(((b,), acc))
    return make_form(chart, 1, terms)


def _numeric_rank(L: LagrangianSystem, hess, seed: int = 20240502) -> int:
    rng = random.Random(seed)
    rank = 0
    for _ in range(REGULARITY_PROBES):
        point = L.chart.sample_point(rng)
        matrix = np.array([[evaluate(e, point) for e in row] for row in hess])
        rank = max(rank, int(np.linalg.matrix_rank(matrix, tol=1e-9)))
    return rank


def solve_semispray(L: LagrangianSystem) -> Semispray:
    """Solve Hess(L) (X, Y) = (dL/dx, -dL/dy) for the semispray.

    Symbolic Cramer solve for 2n <= 4, per-point numeric solve beyond.
    Raises DegenerateLagrangianError, naming the numeric rank, when the
    Hessian is singular at every probe point.
    """
    chart = L.chart
    dim, n = chart.dim, chart.n
    hess, grad = _hessian(L)
    rhs = _twisted_gradient(grad, n)

    rank = _numeric_rank(L, hess)
    if rank < dim:
        det_ok = False
        if dim <= linalg.MAX_SYMBOLIC_DIM:
            det = linalg.determinant(hess)
            det_ok = not is_zero(det) and not equal_on_samples(det, ZERO, trials=20, seed=3)
        if not det_ok:
            raise DegenerateLagrangianError(rank, dim)

    if dim <= linalg.MAX_SYMBOLIC_DIM:
        solution = linalg.cramer_solve(hess, rhs)
        return Semispray(chart, tuple(solution))

    names = chart.names()
    hess_bound = [[bind(e, names) for e in row] for row in hess]
    rhs_bound = [bind(e, names) for e in rhs]

    def numeric(state):
        matrix = np.array([[f(state) for f in row] for row in hess_bound])
        vector = np.array([f(state) for f in rhs_bound])
        try:
            return np.linalg.solve(matrix, vector)
        except np.linalg.LinAlgError as exc:
            raise DegenerateLagrangianError(
                int(np.linalg.matrix_rank(matrix)), dim) from exc

    return Semispray(chart, None, numeric)


@dataclass(frozen=True)
class EulerLagrangeSystem:
    """First-order dynamics xdot_i = X_i, ydot_i = Y_i plus residual checks.

    The residuals restate the defining linear system with the solved
    components substituted; they vanish identically for a regular L.  They
    are None when the semispray is numeric-only.
    """

    chart: Chart
    semispray: Semispray
    residuals: Optional[tuple]

    @property
    def ode(self) -> ODESystem:
        if self.semispray.is_symbolic:
            return ODESystem(self.chart, rhs=self.semispray.components,
                             provenance="euler-lagrange")
        return ODESystem(self.chart, rhs_callable=self.semispray.numeric,
                         provenance="euler-lagrange")


def euler_lagrange_system(L: LagrangianSystem) -> EulerLagrangeSystem:
    """Derive the Euler-Lagrange flow of L.

    Residual j (x-family): sum_i [L_{x_i x_j} X_i + L_{y_i x_j} Y_i] - L_{x_j};
    residual n+j (y-family): sum_i [L_{x_i y_j} X_i + L_{y_i y_j} Y_i] + L_{y_j}.
    """
    xi = solve_semispray(L)
    chart = L.chart
    if not xi.is_symbolic:
        return EulerLagrangeSystem(chart, xi, None)

    dim, n = chart.dim, chart.n
    hess, grad = _hessian(L)
    residuals = []
    for b in range(dim):
        acc = -grad[b] if b < n else grad[b]
        for i in range(dim):
            acc = acc + hess[i][b] * xi.components[i]
        residuals.append(simplify(acc))
    return EulerLagrangeSystem(chart, xi, tuple(residuals))


def energy_is_conserved(L: LagrangianSystem, xi: Semispray, trials: int = 40,
                        seed: int = 0) -> bool:
    """Whether xi(E_L) vanishes on samples, i.e. E_L is a first integral.

    Conservation is not automatic for every regular L under the fixed
    coefficient convention, so it is probed rather than assumed.
    """
    e = energy(L, xi)
    derivative = ZERO
    for a in range(L.chart.dim):
        derivative = derivative + xi.components[a] * differentiate(e, L.chart.variable(a))
    return equal_on_samples(simplify(derivative), ZERO, trials=trials, seed=seed)


# ---------------------------------------------------------------------------
# trajectory diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Proposition1Report:
    """Residuals of the eigenvalue-paired first-order laws along a trajectory.

    For each j the x-family residual is max_t |d/dt (dL/dx_j) - dL/dx_j|
    and the y-family residual is max_t |d/dt (dL/dy_j) + dL/dy_j|, with
    the time derivative taken by central differences on interior nodes.
    The signs mirror the +1/-1 eigendirections of the product structure.
    """

    x_family: tuple
    y_family: tuple

    def max_violation(self) -> float:
        return max(self.x_family + self.y_family)

    def as_dict(self) -> dict:
        return {"x_family": list(self.x_family), "y_family": list(self.y_family)}


def proposition1_report(L: LagrangianSystem, traj: Trajectory) -> Proposition1Report:
    """Check the paired growth/decay laws of dL/dx_j and dL/dy_j."""
    if traj.states.shape[0] < 3:
        raise ValueError("trajectory too short: need at least 3 samples")
    chart = L.chart
    n = chart.n
    columns = traj.columns()
    h = traj.h
    x_res, y_res = [], []
    for j in range(n):
        f = evaluate_many(differentiate(L.L, chart.variable(j)), columns)
        f = np.broadcast_to(f, traj.times.shape)
        fdot = (f[2:] - f[:-2]) / (2.0 * h)
        x_res.append(float(np.max(np.abs(fdot - f[1:-1]))))
        g = evaluate_many(differentiate(L.L, chart.variable(n + j)), columns)
        g = np.broadcast_to(g, traj.times.shape)
        gdot = (g[2:] - g[:-2]) / (2.0 * h)
        y_res.append(float(np.max(np.abs(gdot + g[1:-1]))))
    return Proposition1Report(tuple(x_res), tuple(y_res))


@dataclass(frozen=True)
class ExponentialLawReport:
    """Relative drift of (dL/dx_j) e^{-t} and (dL/dy_j) e^{t} along a flow.

    Both products are constant along exact Euler-Lagrange trajectories;
    drift is measured against max(1, |initial value|).
    """

    x_family: tuple
    y_family: tuple

    def max_drift(self) -> float:
        return max(self.x_family + self.y_family)

    def as_dict(self) -> dict:
        return {"x_family": list(self.x_family), "y_family": list(self.y_family)}


def exponential_law_report(L: LagrangianSystem, traj: Trajectory) -> ExponentialLawReport:
    """Drift of the exponentially-rescaled momenta along a trajectory."""
    chart = L.chart
    n = chart.n
    columns = traj.columns()
    times = traj.times
    decay = np.exp(-(times - times[0]))
    growth = np.exp(times - times[0])
    x_drift, y_drift = [], []
    for j in range(n):
        f = evaluate_many(differentiate(L.L, chart.variable(j)), columns)
        scaled = np.broadcast_to(f, times.shape) * decay
        x_drift.append(float(np.max(np.abs(scaled - scaled[0]))
                             / max(1.0, abs(scaled[0]))))
        g = evaluate_many(differentiate(L.L, chart.variable(n + j)), columns)
        scaled = np.broadcast_to(g, times.shape) * growth
        y_drift.append(float(np.max(np.abs(scaled - scaled[0]))
                             / max(1.0, abs(scaled[0]))))
    return ExponentialLawReport(tuple(x_drift), tuple(y_drift))

"""Levi-Civita connection, curvature, and the space-form comparison tensor.

Conventions: Gamma^a_{bc} = (1/2) g^{ad} (d_b g_{dc} + d_c g_{bd} - d_d g_{bc});
R^e_{abc} = d_a Gamma^e_{bc} - d_b Gamma^e_{ac} + Gamma^e_{ad} Gamma^d_{bc}
- Gamma^e_{bd} Gamma^d_{ac}, lowered in the last slot to R_{abcd}.  The
comparison tensor R0 is the constant-curvature model built from g and J;
a space form is a metric whose curvature is a constant multiple of R0.

Metric inversion is symbolic (adjugate) for charts with 2n <= 4 and
numeric per point beyond; constant metrics short-circuit to exact zeros
at any dimension.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from . import linalg
from .expr import (
    ZERO,
    Const,
    Expression,
    as_expression,
    differentiate,
    evaluate,
    is_zero,
    simplify,
)
from .geometry import Chart, Metric, ProductStructure, _require_same_chart

SINGULARITY_PROBES = 5
SINGULARITY_TOL = 1e-12
PLANE_TOL = 1e-9
ISOTROPY_TOL = 1e-9
SPACE_FORM_TOL = 1e-6
ZERO_TENSOR_TOL = 1e-9


class SingularMetricError(Exception):
    """The metric matrix is numerically singular at every probe point."""


class DegeneratePlaneError(Exception):
    """The plane's induced Gram determinant is below threshold."""


class IsotropicVectorError(Exception):
    """g(u, u) vanishes, so the J-plane of u is inadmissible."""


# ---------------------------------------------------------------------------
# Christoffel symbols
# ---------------------------------------------------------------------------

def _metric_derivatives(g: Metric):
    """dg[a][b][c] = partial_a g_{bc}, simplified."""
    chart = g.chart
    dim = chart.dim
    return tuple(tuple(tuple(differentiate(g.entries[b][c], chart.variable(a))
                             for c in range(dim)) for b in range(dim))
                 for a in range(dim))


def _probe_points(chart: Chart, seed: int = 20240501):
    rng = random.Random(seed)
    return [chart.sample_point(rng) for _ in range(SINGULARITY_PROBES)]


def _check_invertible(g: Metric):
    """Raise unless the metric is invertible at some probe point."""
    for point in _probe_points(g.chart):
        if abs(np.linalg.det(g.at(point))) > SINGULARITY_TOL:
            return
    raise SingularMetricError("metric is singular at every probe point")


@dataclass(frozen=True)
class ChristoffelSymbols:
    """Connection coefficients Gamma^a_{bc}, symmetric in the lower pair.

    symbols[a][b][c] holds the symbolic array when available (constant
    metrics at any dimension, otherwise 2n <= 4); the numeric evaluator
    works at any dimension.
    """

    chart: Chart
    symbols: Optional[tuple]
    metric: Metric
    metric_derivatives: tuple

    @property
    def is_symbolic(self) -> bool:
        return self.symbols is not None

    def is_zero(self) -> bool:
        return self.symbols is not None and all(
            is_zero(e) for plane in self.symbols for row in plane for e in row)

    def at(self, point: Mapping[str, float]) -> np.ndarray:
        """Numeric Gamma^a_{bc} array at a point."""
        dim = self.chart.dim
        if self.symbols is not None:
            out = np.empty((dim, dim, dim))
            for a in range(dim):
                for b in range(dim):
                    for c in range(b, dim):
                        v = evaluate(self.symbols[a][b][c], point)
                        out[a, b, c] = out[a, c, b] = v
            return out
        gm = self.metric.at(point)
        det = np.linalg.det(gm)
        if abs(det) <= SINGULARITY_TOL:
            raise SingularMetricError(f"metric singular at {point}")
        inv = np.linalg.inv(gm)
        dgv = np.array([[[evaluate(e, point) for e in row] for row in plane]
                        for plane in self.metric_derivatives])
        # T[d, b, c] = d_b g_{dc} + d_c g_{bd} - d_d g_{bc}
        T = (np.einsum('bdc->dbc', dgv) + np.einsum('cbd->dbc', dgv)
             - np.einsum('dbc->dbc', dgv))
        return 0.5 * np.einsum('ad,dbc->abc', inv, T)


def christoffel(g: Metric) -> ChristoffelSymbols:
    """Levi-Civita connection coefficients of g.

    Constant metrics give exact symbolic zeros at any dimension; otherwise
    a symbolic adjugate inverse is used for 2n <= 4 and per-point numeric
    evaluation beyond that.
    """
    chart = g.chart
    dim = chart.dim
    _check_invertible(g)
    dg = _metric_derivatives(g)
    if all(is_zero(e) for plane in dg for row in plane for e in row):
        zeros = tuple(tuple((ZERO,) * dim for _ in range(dim)) for _ in range(dim))
        return ChristoffelSymbols(chart, zeros, g, dg)

    if dim > linalg.MAX_SYMBOLIC_DIM:
        return ChristoffelSymbols(chart, None, g, dg)

    adj, det = linalg.inverse_entries(g.entries)
    symbols = []
    for a in range(dim):
        plane = [[ZERO] * dim for _ in range(dim)]
        for b in range(dim):
            for c in range(b, dim):
                acc = ZERO
                for d in range(dim):
                    bracket = dg[b][d][c] + dg[c][b][d] - dg[d][b][c]
                    acc = acc + adj[a][d] * bracket
                value = simplify(Const(0.5) * acc / det)
                plane[b][c] = plane[c][b] = value
        symbols.append(tuple(tuple(row) for row in plane))
    return ChristoffelSymbols(chart, tuple(symbols), g, dg)


# ---------------------------------------------------------------------------
# curvature tensors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvatureTensor:
    """(0,4)-tensor R_{abcd}.

    Canonical storage keeps only a < b, c < d keys and expands the two
    antisymmetries by sign, so they hold exactly.  A dense variant stores
    raw components without imposed symmetry, for synthetic inputs used to
    exercise the violation reports.
    """

    chart: Chart
    canonical: Optional[dict]
    dense: Optional[tuple]

    @staticmethod
    def from_canonical(chart: Chart, entries: Mapping) -> "CurvatureTensor":
        cleaned = {}
        for (a, b, c, d), value in entries.items():
            if not (a < b and c < d):
                raise ValueError("canonical keys require a < b and c < d")
            value = simplify(as_expression(value))
            if not is_zero(value):
                cleaned[(a, b, c, d)] = value
        return CurvatureTensor(chart, cleaned, None)

    @staticmethod
    def from_dense(chart: Chart, components) -> "CurvatureTensor":
        dim = chart.dim
        dense = tuple(tuple(tuple(tuple(as_expression(components[a][b][c][d])
                                        for d in range(dim)) for c in range(dim))
                            for b in range(dim)) for a in range(dim))
        return CurvatureTensor(chart, None, dense)

    @staticmethod
    def zero(chart: Chart) -> "CurvatureTensor":
        return CurvatureTensor(chart, {}, None)

    def component(self, a: int, b: int, c: int, d: int) -> Expression:
        if self.dense is not None:
            return self.dense[a][b][c][d]
        if a == b or c == d:
            return ZERO
        sign = 1
        if a > b:
            a, b, sign = b, a, -sign
        if c > d:
            c, d, sign = d, c, -sign
        value = self.canonical.get((a, b, c, d), ZERO)
        return value if sign == 1 else simplify(-value)

    def is_zero(self) -> bool:
        if self.dense is not None:
            return all(is_zero(simplify(e)) for x in self.dense for y in x
                       for z in y for e in z)
        return not self.canonical

    def scaled(self, factor: float) -> "CurvatureTensor":
        if self.dense is not None:
            dim = self.chart.dim
            scaled = [[[[simplify(Const(factor) * self.dense[a][b][c][d])
                         for d in range(dim)] for c in range(dim)]
                       for b in range(dim)] for a in range(dim)]
            return CurvatureTensor.from_dense(self.chart, scaled)
        entries = {k: Const(factor) * v for k, v in self.canonical.items()}
        return CurvatureTensor.from_canonical(self.chart, entries)

    def at(self, point: Mapping[str, float]) -> np.ndarray:
        """Dense numeric component array at a point."""
        dim = self.chart.dim
        out = np.zeros((dim, dim, dim, dim))
        if self.dense is not None:
            for a in range(dim):
                for b in range(dim):
                    for c in range(dim):
                        for d in range(dim):
                            e = self.dense[a][b][c][d]
                            if not is_zero(e):
                                out[a, b, c, d] = evaluate(e, point)
            return out
        for (a, b, c, d), e in self.canonical.items():
            v = evaluate(e, point)
            out[a, b, c, d] = v
            out[b, a, c, d] = -v
            out[a, b, d, c] = -v
            out[b, a, d, c] = v
        return out

    def apply(self, u, v, z, w, point: Mapping[str, float]) -> float:
        return float(np.einsum('abcd,a,b,c,d->', self.at(point),
                               np.asarray(u, float), np.asarray(v, float),
                               np.asarray(z, float), np.asarray(w, float)))


def riemann(g: Metric) -> CurvatureTensor:
    """Riemann (0,4) curvature of g in canonical storage.

    Requires symbolic Christoffel symbols: constant metrics at any
    dimension (zero curvature), otherwise charts with 2n <= 4.
    """
    chart = g.chart
    dim = chart.dim
    gamma = christoffel(g)
    if gamma.is_zero():
        return CurvatureTensor.zero(chart)
    if not gamma.is_symbolic:
        raise ValueError(
            "symbolic curvature needs 2n <= 4 for a non-constant metric; "
            "use ChristoffelSymbols.at for pointwise work at higher dimension")

    G = gamma.symbols
    cache: dict = {}

    def upper(e, a, b, c):
        # R^e_{abc}
        key = (e, a, b, c)
        if key not in cache:
            acc = differentiate(G[e][b][c], chart.variable(a)) \
                - differentiate(G[e][a][c], chart.variable(b))
            for d in range(dim):
                acc = acc + G[e][a][d] * G[d][b][c] - G[e][b][d] * G[d][a][c]
            cache[key] = simplify(acc)
        return cache[key]

    entries = {}
    for a, b in itertools.combinations(range(dim), 2):
        for c, d in itertools.combinations(range(dim), 2):
            lowered = ZERO
            for e in range(dim):
                if is_zero(g.entries[e][d]):
                    continue
                lowered = lowered + upper(e, a, b, c) * g.entries[e][d]
            value = simplify(lowered)
            if not is_zero(value):
                entries[(a, b, c, d)] = value
    return CurvatureTensor.from_canonical(chart, entries)


def r_zero(g: Metric, J: ProductStructure) -> CurvatureTensor:
    """Comparison tensor of constant paraholomorphic sectional curvature.

    On basis vectors: (1/4) { g_ac g_bd - g_ad g_bc - (gJ)_ac (gJ)_bd
    + (gJ)_ad (gJ)_bc - 2 (gJ)_ab (gJ)_cd } with (gJ)_ab = g(e_a, J e_b).
    """
    _require_same_chart(g, J)
    chart = g.chart
    dim = chart.dim
    gj = [[simplify(sum((g.entries[a][e] * J.entries[e][b] for e in range(dim)),
                        start=ZERO)) for b in range(dim)] for a in range(dim)]
    gm = g.entries

    entries = {}
    for a, b in itertools.combinations(range(dim), 2):
        for c, d in itertools.combinations(range(dim), 2):
            bracket = (gm[a][c] * gm[b][d] - gm[a][d] * gm[b][c]
                       - gj[a][c] * gj[b][d] + gj[a][d] * gj[b][c]
                       - Const(2.0) * gj[a][b] * gj[c][d])
            value = simplify(Const(0.25) * bracket)
            if not is_zero(value):
                entries[(a, b, c, d)] = value
    return CurvatureTensor.from_canonical(chart, entries)


# ---------------------------------------------------------------------------
# symmetry diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetryReport:
    """Max absolute violations of the curvature identities.

    Violations are evaluated componentwise on coordinate quadruples at
    sampled points; multilinearity extends the bound to arbitrary constant
    arguments from the unit box.  The J-invariance row is meaningful only
    for para-Kahler data and is reported separately from the metric-only
    identities.
    """

    antisymmetry_first_pair: float
    antisymmetry_second_pair: float
    first_bianchi: float
    j_invariance: float

    def metric_identities_max(self) -> float:
        return max(self.antisymmetry_first_pair, self.antisymmetry_second_pair,
                   self.first_bianchi)

    def passes(self, tol: float, include_j: bool = True) -> bool:
        worst = self.metric_identities_max()
        if include_j:
            worst = max(worst, self.j_invariance)
        return worst < tol

    def as_dict(self) -> dict:
        return {
            "antisymmetry_first_pair": self.antisymmetry_first_pair,
            "antisymmetry_second_pair": self.antisymmetry_second_pair,
            "first_bianchi": self.first_bianchi,
            "j_invariance": self.j_invariance,
        }


def symmetry_report(R: CurvatureTensor, J: ProductStructure, trials: int = 10,
                    seed: int = 0) -> SymmetryReport:
    """Evaluate the curvature identities at sampled points.

    Checks both antisymmetries, the first Bianchi identity (cyclic sum
    over the first three slots), and J-invariance in the corrected form
    R(JX, JY, Z, V) = -R(X, Y, Z, V) that the comparison tensor and every
    para-Kahler curvature satisfy.
    """
    rng = random.Random(seed)
    v1 = v2 = v3 = v4 = 0.0
    for _ in range(max(1, trials)):
        point = R.chart.sample_point(rng)
        D = R.at(point)
        Jm = J.at(point)
        v1 = max(v1, float(np.max(np.abs(D + D.transpose(1, 0, 2, 3)))))
        v2 = max(v2, float(np.max(np.abs(D + D.transpose(0, 1, 3, 2)))))
        bianchi = D + D.transpose(1, 2, 0, 3) + D.transpose(2, 0, 1, 3)
        v3 = max(v3, float(np.max(np.abs(bianchi))))
        twisted = np.einsum('pa,qb,pqcd->abcd', Jm, Jm, D)
        v4 = max(v4, float(np.max(np.abs(twisted + D))))
    return SymmetryReport(v1, v2, v3, v4)


def nabla_J(g: Metric, J: ProductStructure, trials: int = 10, seed: int = 0) -> float:
    """Max violation of parallelism of J under the Levi-Civita connection.

    Returns the largest |(nabla_a J)^b_c| over sampled points, where
    (nabla_a J)^b_c = d_a J^b_c + Gamma^b_{ad} J^d_c - Gamma^d_{ac} J^b_d.
    """
    _require_same_chart(g, J)
    chart = g.chart
    dim = chart.dim
    gamma = christoffel(g)
    dJ = tuple(tuple(tuple(differentiate(J.entries[b][c], chart.variable(a))
                           for c in range(dim)) for b in range(dim))
               for a in range(dim))
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(max(1, trials)):
        point = chart.sample_point(rng)
        G = gamma.at(point)
        Jm = J.at(point)
        dJv = np.array([[[evaluate(e, point) for e in row] for row in plane]
                        for plane in dJ])
        term2 = np.einsum('bad,dc->abc', G, Jm)
        term3 = np.einsum('dac,bd->abc', G, Jm)
        worst = max(worst, float(np.max(np.abs(dJv + term2 - term3))))
    return worst


# ---------------------------------------------------------------------------
# sectional curvature and the space-form test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SectionalPlane:
    """A 2-plane span{u, v} in the tangent space at a base point."""

    point: Mapping[str, float]
    u: tuple
    v: tuple

    def vectors(self):
        return np.asarray(self.u, float), np.asarray(self.v, float)


def sectional_curvature(R: CurvatureTensor, g: Metric, plane: SectionalPlane) -> float:
    """k = R(u,v,u,v) / (g(u,u) g(v,v) - g(u,v)^2) at the base point."""
    u, v = plane.vectors()
    gm = g.at(plane.point)
    guu = float(u @ gm @ u)
    gvv = float(v @ gm @ v)
    guv = float(u @ gm @ v)
    denominator = guu * gvv - guv * guv
    if abs(denominator) <= PLANE_TOL:
        raise DegeneratePlaneError(
            f"plane Gram determinant {denominator:.3e} below threshold")
    numerator = R.apply(u, v, u, v, plane.point)
    return numerator / denominator


def j_sectional_curvature(R: CurvatureTensor, g: Metric, J: ProductStructure,
                          u, point: Mapping[str, float]) -> float:
    """Sectional curvature of the J-plane span{u, Ju} for non-isotropic u."""
    u = np.asarray(u, float)
    gm = g.at(point)
    if abs(float(u @ gm @ u)) <= ISOTROPY_TOL:
        raise IsotropicVectorError("g(u, u) = 0: the J-plane of u is inadmissible")
    ju = J.at(point) @ u
    return sectional_curvature(R, g, SectionalPlane(point, tuple(u), tuple(ju)))


def constant_c_test(R: CurvatureTensor, R0: CurvatureTensor, trials: int = 10,
                    seed: int = 0) -> Optional[float]:
    """Least-squares fit of R = c * R0 over all components at sampled points.

    Returns the fitted c when the max residual stays below 1e-6, the exact
    0.0 when R itself vanishes numerically, and None otherwise ("not a
    space form").
    """
    rng = random.Random(seed)
    samples_R = []
    samples_R0 = []
    for _ in range(max(1, trials)):
        point = R.chart.sample_point(rng)
        samples_R.append(R.at(point).ravel())
        samples_R0.append(R0.at(point).ravel())
    A = np.concatenate(samples_R)
    B = np.concatenate(samples_R0)
    if float(np.max(np.abs(A))) < ZERO_TENSOR_TOL:
        return 0.0
    denom = float(B @ B)
    if denom == 0.0:
        return None
    c = float(A @ B) / denom
    residual = float(np.max(np.abs(A - c * B)))
    return c if residual < SPACE_FORM_TOL else None


def metric_from_potential(phi: Expression, chart: Chart) -> Metric:
    """Neutral metric from a scalar potential.

    The x-y block is the mixed Hessian of phi and the diagonal blocks are
    zero, so the model product structure stays skew-compatible; whether
    the result is para-Kahler is a property to verify (via nabla_J), not
    an assumption.  The potential x1*y1 reproduces the flat model.
    """
    phi = as_expression(phi)
    n, dim = chart.n, chart.dim
    rows = [[ZERO] * dim for _ in range(dim)]
    for i in range(n):
        dphi = differentiate(phi, chart.variable(i))
        for j in range(n):
            h = differentiate(dphi, chart.variable(n + j))
            rows[i][n + j] = h
            rows[n + j][i] = h
    return Metric.from_rows(chart, rows)

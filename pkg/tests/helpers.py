"""Shared generators and finite-difference oracles for the test suite."""

import random

import numpy as np

from parakahler.expr import Const, Product, Sum, Var, simplify
from parakahler.geometry import Chart


def random_point(rng: random.Random, chart: Chart, box: float = 2.0) -> dict:
    return chart.sample_point(rng, box=box)


def random_polynomial(rng: random.Random, chart: Chart, max_degree: int = 3,
                      terms: int = 4, coeff_box: float = 2.0,
                      variables=None):
    """Random polynomial with bounded degree over the chart coordinates."""
    if variables is None:
        variables = chart.variables()
    parts = []
    for _ in range(rng.randint(1, terms)):
        coeff = rng.uniform(-coeff_box, coeff_box)
        factors = [Const(coeff)]
        for _ in range(rng.randint(0, max_degree)):
            factors.append(rng.choice(variables))
        parts.append(Product(tuple(factors)) if len(factors) > 1 else factors[0])
    return simplify(Sum(tuple(parts)))


def random_regular_lagrangian(rng: random.Random, chart: Chart):
    """Random degree <= 3 Lagrangian with a globally invertible Hessian.

    The bilinear core sum(c_i x_i y_i) fixes the mixed Hessian block; the
    polynomial noise depends on one eigencoordinate family only, so the
    Hessian determinant stays the constant prod(c_i)^2 everywhere.
    """
    n = chart.n
    core = []
    for i in range(n):
        c = rng.uniform(0.8, 1.6) * rng.choice([-1.0, 1.0])
        core.append(Product((Const(c), Var("x", i + 1), Var("y", i + 1))))
    kind = rng.choice(["x", "y", "none"])
    if kind == "none":
        return simplify(Sum(tuple(core)))
    family = tuple(Var(kind, i + 1) for i in range(n))
    noise = random_polynomial(rng, chart, max_degree=3, terms=3,
                              coeff_box=0.05, variables=family)
    return simplify(Sum((*core, noise)))


def fd_christoffel(g, point: dict, h: float = 1e-6) -> np.ndarray:
    """Central-difference Christoffel symbols, Gamma[a, b, c] = Gamma^a_bc."""
    chart = g.chart
    dim = chart.dim
    names = chart.names()
    dg = np.empty((dim, dim, dim))
    for a in range(dim):
        plus = dict(point)
        minus = dict(point)
        plus[names[a]] += h
        minus[names[a]] -= h
        dg[a] = (g.at(plus) - g.at(minus)) / (2.0 * h)
    inv = np.linalg.inv(g.at(point))
    gamma = np.empty((dim, dim, dim))
    for a in range(dim):
        for b in range(dim):
            for c in range(dim):
                acc = 0.0
                for d in range(dim):
                    acc += inv[a, d] * (dg[b][d, c] + dg[c][b, d] - dg[d][b, c])
                gamma[a, b, c] = 0.5 * acc
    return gamma


def fd_riemann_lowered(g, gamma, point: dict, h: float = 1e-5) -> np.ndarray:
    """Finite-difference lowered curvature R[a, b, c, d] = R(e_a, e_b, e_c, e_d).

    Differentiates the exact symbolic Christoffel evaluation; only the
    outer derivative is approximate.
    """
    chart = g.chart
    dim = chart.dim
    names = chart.names()
    dgamma = np.empty((dim, dim, dim, dim))
    for a in range(dim):
        plus = dict(point)
        minus = dict(point)
        plus[names[a]] += h
        minus[names[a]] -= h
        dgamma[a] = (gamma.at(plus) - gamma.at(minus)) / (2.0 * h)
    gm = gamma.at(point)
    upper = (np.einsum("aebc->eabc", dgamma)
             - np.einsum("beac->eabc", dgamma)
             + np.einsum("ead,dbc->eabc", gm, gm)
             - np.einsum("ebd,dac->eabc", gm, gm))
    return np.einsum("eabc,ed->abcd", upper, g.at(point))

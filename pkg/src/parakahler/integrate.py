"""Fixed-step integration of derived flows with structure diagnostics.

Provides the classical fourth-order Runge-Kutta scheme for any autonomous
system on the chart and a symplectic Euler scheme for Hamiltonian systems
(x as positions, y as momenta for the canonical pairing), plus drift and
symplecticity reports.  No adaptive step control: the diagnostics want
uniform grids.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .expr import Expression, bind, differentiate, evaluate_many
from .geometry import Chart

MAX_STEPS = 10_000_000
NEWTON_TOL = 1e-12
NEWTON_MAX_ITERS = 25
FD_STEP = 1e-6

PROVENANCES = ("euler-lagrange", "hamiltonian", "custom")


class NonFiniteStateError(Exception):
    """The state left floating-point range; carries the failing step index."""

    def __init__(self, step: int, message: str = ""):
        super().__init__(message or f"non-finite state at step {step}")
        self.step = step


class NewtonConvergenceError(Exception):
    """The implicit substep failed to converge; carries the step index."""

    def __init__(self, step: int, message: str = ""):
        super().__init__(message or f"Newton iteration failed at step {step}")
        self.step = step


@dataclass(frozen=True)
class ODESystem:
    """Autonomous first-order system on the chart coordinates.

    Exactly one of rhs (a tuple of 2n Expressions) or rhs_callable (a map
    from state vectors to derivative vectors) must be provided; the
    callable form exists for systems whose symbolic solve is infeasible.
    """

    chart: Chart
    rhs: Optional[tuple] = None
    rhs_callable: Optional[Callable] = None
    provenance: str = "custom"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")
        if (self.rhs is None) == (self.rhs_callable is None):
            raise ValueError("provide exactly one of rhs or rhs_callable")
        if self.rhs is not None and len(self.rhs) != self.chart.dim:
            raise ValueError(f"expected {self.chart.dim} right-hand sides")

    def vector_function(self) -> Callable:
        """Compile the right-hand side to a state -> ndarray closure."""
        if self.rhs_callable is not None:
            return self.rhs_callable
        names = self.chart.names()
        bound = [bind(e, names) for e in self.rhs]
        def f(state):
            return np.array([fb(state) for fb in bound])
        return f


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on the uniform grid t0, t0+h, ..., t0+steps*h."""

    t0: float
    h: float
    states: np.ndarray
    names: tuple

    def __post_init__(self):
        states = np.asarray(self.states, float)
        if states.ndim != 2 or states.shape[1] != len(self.names):
            raise ValueError("states must be (steps+1) x len(names)")
        if not np.all(np.isfinite(states)):
            raise ValueError("trajectory contains non-finite entries")
        object.__setattr__(self, "states", states)

    @property
    def steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.states.shape[0])

    def columns(self) -> dict:
        """Per-coordinate arrays keyed by name, for vectorized evaluation."""
        return {name: self.states[:, i] for i, name in enumerate(self.names)}

    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()


def _step_count(t0: float, t1: float, h: float) -> int:
    if not (h > 0.0):
        raise ValueError("step size h must be positive")
    if not (t1 > t0):
        raise ValueError("t1 must exceed t0")
    span = (t1 - t0) / h
    if span > MAX_STEPS:
        raise ValueError(f"{span:.3g} steps exceed the limit {MAX_STEPS}")
    steps = max(1, round(span))
    return steps


def integrate_rk4(sys: ODESystem, state0: Sequence[float], t0: float, t1: float,
                  h: float) -> Trajectory:
    """Classical fourth-order Runge-Kutta with a fixed step."""
    steps = _step_count(t0, t1, h)
    f = sys.vector_function()
    state = np.asarray(state0, float)
    if state.shape != (sys.chart.dim,):
        raise ValueError(f"initial state must have length {sys.chart.dim}")
    out = np.empty((steps + 1, sys.chart.dim))
    out[0] = state
    with np.errstate(all="ignore"):
        for k in range(steps):
            k1 = f(state)
            k2 = f(state + 0.5 * h * k1)
            k3 = f(state + 0.5 * h * k2)
            k4 = f(state + h * k3)
            state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(state)):
                raise NonFiniteStateError(k + 1)
            out[k + 1] = state
    return Trajectory(t0, h, out, sys.chart.names())


def _hamiltonian_gradients(H):
    """Bound closures for H_x, H_y, and the mixed block d2H/dx dy."""
    chart = H.chart
    names = chart.names()
    n = chart.n
    hx = [differentiate(H.H, chart.variable(i)) for i in range(n)]
    hy = [differentiate(H.H, chart.variable(n + i)) for i in range(n)]
    hxy = [[differentiate(hx[i], chart.variable(n + j)) for j in range(n)]
           for i in range(n)]
    bind_all = lambda exprs: [bind(e, names) for e in exprs]
    return bind_all(hx), bind_all(hy), [bind_all(row) for row in hxy]


def integrate_symplectic_euler(H, state0: Sequence[float], t0: float, t1: float,
                               h: float) -> Trajectory:
    """Symplectic Euler for the para-Hamiltonian equations.

    One step solves y' = y - h * H_x(x, y') implicitly (damped Newton with
    the analytic Jacobian I + h * H_xy, tolerance 1e-12, at most 25
    iterations), then advances x' = x + h * H_y(x, y').  H is any object
    with a chart and a symbolic Hamiltonian attribute H.
    """
    chart = H.chart
    n = chart.n
    steps = _step_count(t0, t1, h)
    hx, hy, hxy = _hamiltonian_gradients(H)

    state = np.asarray(state0, float)
    if state.shape != (chart.dim,):
        raise ValueError(f"initial state must have length {chart.dim}")
    out = np.empty((steps + 1, chart.dim))
    out[0] = state

    with np.errstate(all="ignore"):
        for k in range(steps):
            x = state[:n]
            y = state[n:].copy()
            work = np.concatenate([x, y])

            def residual(yv):
                work[n:] = yv
                grad = np.array([f(work) for f in hx])
                return yv - state[n:] + h * grad

            ynew = y
            r = residual(ynew)
            if not np.all(np.isfinite(r)):
                raise NonFiniteStateError(k + 1)
            converged = float(np.max(np.abs(r))) <= NEWTON_TOL
            for _ in range(NEWTON_MAX_ITERS):
                if converged:
                    break
                work[n:] = ynew
                jac = np.eye(n) + h * np.array(
                    [[f(work) for f in row] for row in hxy])
                if not np.all(np.isfinite(jac)):
                    raise NonFiniteStateError(k + 1)
                try:
                    delta = np.linalg.solve(jac, -r)
                except np.linalg.LinAlgError as exc:
                    raise NewtonConvergenceError(
                        k + 1, f"singular Newton system at step {k + 1}") from exc
                scale = 1.0
                norm0 = float(np.max(np.abs(r)))
                while scale >= 1.0 / 64.0:
                    candidate = ynew + scale * delta
                    rc = residual(candidate)
                    if float(np.max(np.abs(rc))) < norm0 or scale < 1.0 / 32.0:
                        ynew, r = candidate, rc
                        break
                    scale *= 0.5
                if not np.all(np.isfinite(r)):
                    raise NonFiniteStateError(k + 1)
                converged = float(np.max(np.abs(r))) <= NEWTON_TOL
            if not converged:
                raise NewtonConvergenceError(k + 1)

            work[n:] = ynew
            xnew = x + h * np.array([f(work) for f in hy])
            state = np.concatenate([xnew, ynew])
            if not np.all(np.isfinite(state)):
                raise NonFiniteStateError(k + 1)
            out[k + 1] = state
    return Trajectory(t0, h, out, chart.names())


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConservationReport:
    """Drift statistics for a scalar quantity along a trajectory.

    max_relative_drift is max_t |q(t) - q(0)| / max(1, |q(0)|); quantities
    of order one make this an absolute drift.
    """

    first: float
    last: float
    minimum: float
    maximum: float
    max_relative_drift: float

    def as_dict(self) -> dict:
        return {
            "first": self.first,
            "last": self.last,
            "minimum": self.minimum,
            "maximum": self.maximum,
            "max_relative_drift": self.max_relative_drift,
        }


def conservation_report(traj: Trajectory, quantity: Expression) -> ConservationReport:
    """Evaluate a would-be first integral on every row and report drift."""
    values = evaluate_many(quantity, traj.columns())
    values = np.broadcast_to(values, traj.times.shape)
    first = float(values[0])
    drift = float(np.max(np.abs(values - first))) / max(1.0, abs(first))
    return ConservationReport(first, float(values[-1]), float(values.min()),
                              float(values.max()), drift)


def canonical_matrix(chart: Chart) -> np.ndarray:
    """Constant coefficient matrix of the canonical 2-form dx_i ^ dy_i."""
    n = chart.n
    omega = np.zeros((2 * n, 2 * n))
    omega[:n, n:] = np.eye(n)
    omega[n:, :n] = -np.eye(n)
    return omega


def symplecticity_check(H, scheme: str, state0: Sequence[float], h: float,
                        steps: int, fd_step: float = FD_STEP) -> float:
    """Deviation of the step-composed flow from preserving the canonical form.

    Computes the flow Jacobian M by central finite differences and returns
    the max entry of |M^T Omega M - Omega|.
    """
    chart = H.chart
    t1 = steps * h

    if scheme == "symplectic-euler":
        def flow(s):
            return integrate_symplectic_euler(H, s, 0.0, t1, h).final_state()
    elif scheme == "rk4":
        names = chart.names()
        n = chart.n
        rhs = ([differentiate(H.H, chart.variable(n + i)) for i in range(n)]
               + [-differentiate(H.H, chart.variable(i)) for i in range(n)])
        sys = ODESystem(chart, rhs=tuple(rhs), provenance="hamiltonian")
        def flow(s):
            return integrate_rk4(sys, s, 0.0, t1, h).final_state()
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    dim = chart.dim
    base = np.asarray(state0, float)
    M = np.empty((dim, dim))
    for j in range(dim):
        bump = np.zeros(dim)
        bump[j] = fd_step
        M[:, j] = (flow(base + bump) - flow(base - bump)) / (2.0 * fd_step)
    omega = canonical_matrix(chart)
    return float(np.max(np.abs(M.T @ omega @ M - omega)))


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def atomic_write_text(path: str, text: str):
    """Write via a sibling temp file and rename, so readers never see a torn file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trajectory_csv(traj: Trajectory, path: str):
    """CSV with header t,x1,..,xn,y1,..,yn and 17 significant digits."""
    lines = ["t," + ",".join(traj.names)]
    times = traj.times
    for i in range(traj.states.shape[0]):
        row = [times[i], *traj.states[i]]
        lines.append(",".join("%.17g" % v for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")

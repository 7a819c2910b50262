"""Compare energy drift of RK4 and symplectic Euler across step sizes.

Integrates H = x1*y1 from (1, 1) over [0, 5] and prints the maximum
relative drift of H along each trajectory, plus the symplecticity
deviation of the one-step map measured by finite differences.
"""

import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from parakahler.expr import parse  # noqa: E402
from parakahler.geometry import Chart  # noqa: E402
from parakahler.hamilton import HamiltonianSystem, hamilton_odes  # noqa: E402
from parakahler.integrate import (  # noqa: E402
    conservation_report,
    integrate_rk4,
    integrate_symplectic_euler,
    symplecticity_check,
)

STEPS = (0.1, 0.05, 0.01, 0.005)
T1 = 5.0


def run() -> None:
    chart = Chart(1)
    system = HamiltonianSystem(chart, parse("x1*y1", chart))
    odes = hamilton_odes(system)
    state = (1.0, 1.0)

    header = f"{'h':>8}  {'scheme':>16}  {'H drift':>12}  {'sympl dev':>12}"
    print(header)
    print("-" * len(header))
    for h in STEPS:
        for scheme in ("rk4", "symplectic-euler"):
            if scheme == "rk4":
                trajectory = integrate_rk4(odes, state, 0.0, T1, h)
            else:
                trajectory = integrate_symplectic_euler(system, state, 0.0, T1, h)
            drift = conservation_report(trajectory, system.H).max_relative_drift
            deviation = symplecticity_check(system, scheme, state, h, steps=100)
            print(f"{h:8.3f}  {scheme:>16}  {drift:12.3e}  {deviation:12.3e}")


if __name__ == "__main__":
    run()

"""Mechanics on the flat para-Kahler model space.

The package builds the neutral-metric model structure on R^{2n}, verifies
its curvature identities, derives Euler-Lagrange and Hamiltonian flows
from scalar sources, and integrates them with structure-preservation
diagnostics.
"""

from .curvature import (
    ChristoffelSymbols,
    CurvatureTensor,
    DegeneratePlaneError,
    IsotropicVectorError,
    SingularMetricError,
    SymmetryReport,
    christoffel,
    constant_c_test,
    j_sectional_curvature,
    metric_from_potential,
    nabla_J,
    r_zero,
    riemann,
    sectional_curvature,
    symmetry_report,
)
from .expr import (
    EvaluationError,
    ExpressionError,
    ParseError,
    SamplingError,
    differentiate,
    equal_on_samples,
    evaluate,
    parse,
    simplify,
    to_source,
)
from .geometry import (
    Chart,
    DegreeError,
    DifferentialForm,
    Metric,
    ProductStructure,
    VectorField,
    compatibility_check,
    exterior_derivative,
    insertion_operator,
    interior_product,
    j_apply,
    j_dual_apply,
    metric_apply,
    model_dual_structure,
    model_metric,
    model_product_structure,
    vertical_derivative,
    wedge,
)
from .hamilton import (
    HamiltonianSystem,
    canonical_form,
    hamilton_odes,
    hamiltonian_vector_field,
    liouville_one_form,
)
from .integrate import (
    ConservationReport,
    NewtonConvergenceError,
    NonFiniteStateError,
    ODESystem,
    Trajectory,
    conservation_report,
    integrate_rk4,
    integrate_symplectic_euler,
    symplecticity_check,
    write_trajectory_csv,
)
from .lagrange import (
    DegenerateLagrangianError,
    EulerLagrangeSystem,
    LagrangianSystem,
    Semispray,
    energy,
    energy_differential,
    euler_lagrange_system,
    exponential_law_report,
    kahler_form,
    liouville_field,
    proposition1_report,
    solve_semispray,
)

__version__ = "0.1.0"

__all__ = [
    "Chart",
    "ChristoffelSymbols",
    "ConservationReport",
    "CurvatureTensor",
    "DegenerateLagrangianError",
    "DegeneratePlaneError",
    "DegreeError",
    "DifferentialForm",
    "EulerLagrangeSystem",
    "EvaluationError",
    "ExpressionError",
    "HamiltonianSystem",
    "IsotropicVectorError",
    "LagrangianSystem",
    "Metric",
    "NewtonConvergenceError",
    "NonFiniteStateError",
    "ODESystem",
    "ParseError",
    "ProductStructure",
    "SamplingError",
    "Semispray",
    "SingularMetricError",
    "SymmetryReport",
    "Trajectory",
    "VectorField",
    "canonical_form",
    "christoffel",
    "compatibility_check",
    "conservation_report",
    "constant_c_test",
    "differentiate",
    "energy",
    "energy_differential",
    "equal_on_samples",
    "euler_lagrange_system",
    "evaluate",
    "exponential_law_report",
    "exterior_derivative",
    "hamilton_odes",
    "hamiltonian_vector_field",
    "insertion_operator",
    "integrate_rk4",
    "integrate_symplectic_euler",
    "interior_product",
    "j_apply",
    "j_dual_apply",
    "j_sectional_curvature",
    "kahler_form",
    "liouville_field",
    "liouville_one_form",
    "metric_apply",
    "metric_from_potential",
    "model_dual_structure",
    "model_metric",
    "model_product_structure",
    "nabla_J",
    "parse",
    "proposition1_report",
    "r_zero",
    "riemann",
    "sectional_curvature",
    "simplify",
    "solve_semispray",
    "symmetry_report",
    "symplecticity_check",
    "to_source",
    "vertical_derivative",
    "wedge",
    "write_trajectory_csv",
]

"""loadcouple: cell load coupling fixed points, exact feasibility and linear bounds."""

from .netmodel import (
    Cell,
    NetworkInstance,
    Pixel,
    SchemaError,
    SchemaVersionError,
    ServingAssignment,
    Violation,
    assign_best_server,
    load_instance,
    save_instance,
    validate,
    with_serving,
)
from .coupling import (
    CouplingCoefficients,
    LinearizedSystem,
    asymptotic_linearization,
    cell_hessian,
    coefficients,
    evaluate,
    hessian_entry,
    jacobian,
    load_function,
    sinr,
    tangent_linearization,
)
from .linfeas import (
    LinearSolveOutcome,
    feasibility_check,
    lower_bound,
    solve_linear,
    spectral_radius,
    upper_bound,
)
from .solver import (
    SolveReport,
    SolverConfig,
    fixed_point_iteration,
    solve,
    solve_with_interval_stop,
)
from .scenario import ScenarioSpec, generate, load_scenario_spec, rotate_sector
from .analysis import (
    BoundaryCertificate,
    CellBounds,
    ComparisonReport,
    PreconditionError,
    SweepRow,
    bound_quality,
    compare_configs,
    demand_sweep,
    feasibility_boundary,
)

__version__ = "0.1.0"

__all__ = [
    "Cell",
    "Pixel",
    "NetworkInstance",
    "ServingAssignment",
    "Violation",
    "SchemaError",
    "SchemaVersionError",
    "validate",
    "assign_best_server",
    "load_instance",
    "save_instance",
    "with_serving",
    "CouplingCoefficients",
    "LinearizedSystem",
    "coefficients",
    "sinr",
    "load_function",
    "jacobian",
    "hessian_entry",
    "cell_hessian",
    "asymptotic_linearization",
    "tangent_linearization",
    "evaluate",
    "LinearSolveOutcome",
    "solve_linear",
    "spectral_radius",
    "feasibility_check",
    "lower_bound",
    "upper_bound",
    "SolverConfig",
    "SolveReport",
    "solve",
    "solve_with_interval_stop",
    "fixed_point_iteration",
    "ScenarioSpec",
    "generate",
    "load_scenario_spec",
    "rotate_sector",
    "SweepRow",
    "BoundaryCertificate",
    "CellBounds",
    "ComparisonReport",
    "PreconditionError",
    "demand_sweep",
    "feasibility_boundary",
    "compare_configs",
    "bound_quality",
    "__version__",
]

"""Finite elements for 1D flow with self-similar fractal interface microstructures."""

from .analysis import (
    ConvergenceReport,
    ConvergenceRow,
    NormTriple,
    apriori_check,
    cantor_forcing_l2,
    convergence_study,
    energy_terms,
    inject,
    norms,
    rate_estimate,
    trace_l2,
    verify_interface_conditions,
)
from .coefficients import (
    CoefficientSpec,
    PointFunction,
    coefficient_table,
    eval_coefficient,
    eval_forcing,
    forcing_table,
    parse_coefficient,
    partial_l1_sum,
    sample_random_beta,
)
from .experiments import (
    ExperimentConfig,
    MonteCarloReport,
    emit_plot_data,
    monte_carlo,
    run_experiment,
    write_report,
)
from .fem import (
    BoundaryCondition,
    EndpointMode,
    Mesh1D,
    PiecewiseLinearFn,
    TridiagonalSystem,
    assemble,
    build_mesh,
    evaluate,
    setup_problem,
    solve_problem,
    solve_tridiagonal,
)
from .geometry import (
    IteratedFunctionSystem,
    Microstructure,
    Similarity,
    apply_similarity,
    cantor_extremes,
    develop,
    similarity_dimension,
)
from .oracle import ExactSolution, exact_solve

__version__ = "0.1.0"

"""Online learning of a time signal by integrating the Euler-Lagrange dynamics
of a dissipative regularization functional, with a batch Green's-function
solver and a graph-augmented variant for cross-checks."""
from .global_solver import (
    ConvergenceParams,
    GlobalSystem,
    GreensFunction,
    SingularSystemError,
    assemble_system,
    convergence_indicator,
    functional_value,
    green_eval,
    greens_function,
    reconstruct,
    solve_global,
)
from .graph import ErnGraph, ErnNode, run_graph, st_forward_step
from .integrator import (
    Propagator,
    RunLog,
    TrainingConfig,
    expm,
    forward_step,
    free_evolution,
    half_step_state,
    run_epochs,
)
from .operators import (
    CompanionSystem,
    OperatorSpec,
    UnsupportedOrderError,
    companion_system,
    reduced_coefficients,
    system_from_roots,
)
from .signals import Trajectory, build_task, finite_difference_derivatives, permute, sample_grid

__version__ = "0.1.0"

from .auglag import minimize_auglag
from .problem import (
    NlpProblem,
    SolveReport,
    SolverOptions,
    Status,
    central_differences,
    estimate_multipliers,
    max_violation,
    stationarity_measure,
)
from .sqp import minimize_sqp, solve_ldp, solve_qp


def minimize(problem: NlpProblem, x0, opts: SolverOptions = None, callback=None) -> SolveReport:
    """Run the method named in ``opts.method``; never raises on non-convergence."""
    opts = opts or SolverOptions()
    if opts.method == "sqp":
        return minimize_sqp(problem, x0, opts, callback)
    return minimize_auglag(problem, x0, opts, callback)


__all__ = [
    "NlpProblem",
    "SolveReport",
    "SolverOptions",
    "Status",
    "central_differences",
    "estimate_multipliers",
    "max_violation",
    "minimize",
    "minimize_auglag",
    "minimize_sqp",
    "solve_ldp",
    "solve_qp",
    "stationarity_measure",
]

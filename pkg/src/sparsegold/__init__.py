"""sparsegold: sparse-recovery solvers with a semi-monotone Goldstein line
search, plus the randomized compressed-sensing benchmark harness around them.
"""

from .bench import (
    DEFAULT_BASE_SEED,
    GeneratedProblem,
    ProblemSpec,
    ProfileCurve,
    RunRecord,
    SolverSummary,
    full_grid,
    generate_problem,
    make_grid,
    performance_profile,
    read_records,
    reduced_grid,
    relative_error,
    run_benchmark,
    summarize,
    write_records,
)
from .diagnostics import CheckResult, GroupResult, check_trace, selftest
from .linesearch import (
    LineSearchOutcome,
    NonmonotoneState,
    goldstein_quotients,
    monotone_accept,
    search_alpha,
    semi_monotone_accept,
)
from .objective import (
    CompositeObjective,
    EvalCounter,
    L1,
    Regularizer,
    descent_measure,
    direction,
    shrinkage,
)
from .operators import (
    KINDS,
    EnsembleSpec,
    LinearOperator,
    fwht,
    make_operator,
    operator_norm_sq,
)
from .solvers import (
    SOLVERS,
    SolveResult,
    SolveStatus,
    SolverConfig,
    TraceRecord,
    bb_tau,
    fista_solve,
    isga_solve,
    ista_solve,
    smisga_solve,
    stopping_check,
)

__version__ = "0.1.0"

__all__ = [
    "CheckResult",
    "CompositeObjective",
    "DEFAULT_BASE_SEED",
    "EnsembleSpec",
    "EvalCounter",
    "GeneratedProblem",
    "GroupResult",
    "KINDS",
    "L1",
    "LinearOperator",
    "LineSearchOutcome",
    "NonmonotoneState",
    "ProblemSpec",
    "ProfileCurve",
    "Regularizer",
    "RunRecord",
    "SOLVERS",
    "SolveResult",
    "SolveStatus",
    "SolverConfig",
    "SolverSummary",
    "TraceRecord",
    "bb_tau",
    "check_trace",
    "descent_measure",
    "direction",
    "fista_solve",
    "full_grid",
    "fwht",
    "generate_problem",
    "goldstein_quotients",
    "isga_solve",
    "ista_solve",
    "make_grid",
    "make_operator",
    "monotone_accept",
    "operator_norm_sq",
    "performance_profile",
    "read_records",
    "reduced_grid",
    "relative_error",
    "run_benchmark",
    "search_alpha",
    "selftest",
    "semi_monotone_accept",
    "shrinkage",
    "smisga_solve",
    "stopping_check",
    "summarize",
    "write_records",
]

"""Two-stage stochastic linear programs: a dense LP core, the norm-grid
decoupling heuristic, L-shaped decomposition and a benchmark harness."""

from .ballstage import BallOptions, BallStageSolution, solve_ball_constrained, solve_unconstrained_stage1
from .baselines import ExtensiveSolution, build_extensive, dgap_pct, ngap_pct, run_naive, solve_extensive
from .bench import BenchConfig, BenchmarkRecord, records_from_csv, records_to_csv, records_to_table, run_benchmark
from .decouple import (
    DecouplingConfig,
    DecouplingResult,
    InvarianceEstimate,
    estimate_invariance_epsilon,
    expected_recourse,
    run_decoupling,
    solve_recourse_fixed_norm,
    solve_recourse_fixed_x,
)
from .errors import (
    AssumptionViolation,
    GridTooShort,
    InfeasibleError,
    MasterUnbounded,
    MaxCutsExceeded,
    NotConverged,
    NumericalFailure,
    ParseError,
    RecourseInfeasible,
    RecourseUnbounded,
    StochDecoupleError,
    UnboundedError,
    ValidationError,
)
from .linprog import LpProblem, LpSolution, LpStatus, RevisedSimplex, SolverOptions, solve_lp, verify_solution
from .lshaped import BendersResult, OptimalityCut, run_benders
from .model import (
    FirstStageData,
    GeneratorConfig,
    Scenario,
    StochasticProgram,
    generate_gaussian_instance,
    load_instance,
    max_feasible_norm,
    save_instance,
    validate,
)

__version__ = "0.1.0"

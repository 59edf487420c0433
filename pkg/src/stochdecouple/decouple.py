"""Decoupled approximation of the two-stage optimum over a grid of first-stage norms.

For every grid value tau = delta * k the norm-capped first stage is solved,
giving an objective Z1[k] and a norm X[k].  The recourse problems are then
solved with the first-stage vector replaced by ``X[k] * e1``, i.e. with
right-hand side ``h - X[k] * T[:, 0]``, and the estimate is
``max_k Z1[k] + E[Q(X[k] e1)]``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ballstage import BallOptions, solve_ball_constrained, solve_unconstrained_stage1
from .errors import GridTooShort, NumericalFailure, RecourseInfeasible, RecourseUnbounded
from .linprog import LpProblem, LpStatus, RevisedSimplex, SolverOptions, solve_lp
from .model import Scenario, StochasticProgram

RECOURSE_LP = SolverOptions(method="revised")


@dataclass(frozen=True)
class DecouplingConfig:
    delta: float = 0.01
    k_max: int = 100
    lp: SolverOptions = RECOURSE_LP
    ball: BallOptions = BallOptions()
    workers: int = 1
    keep_table: bool = False

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass
class DecouplingResult:
    Z1: np.ndarray
    X: np.ndarray
    Z2_expected: np.ndarray
    Z: np.ndarray
    best_k: int
    z_hat: float
    k_max_effective: int
    x_tilde_norm: float
    Z2: np.ndarray | None = None


@dataclass
class InvarianceEstimate:
    epsilon_hat: float
    num_probes: int
    norm_tested: float
    mean_recourse: float
    deviations: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _recourse_value(sol, scenario_index, k=None) -> float:
    if sol.status is LpStatus.INFEASIBLE:
        raise RecourseInfeasible("recourse problem is infeasible", scenario=scenario_index, k=k)
    if sol.status is LpStatus.UNBOUNDED:
        raise RecourseUnbounded("recourse problem is unbounded", scenario=scenario_index, k=k)
    return sol.objective


def solve_recourse_fixed_x(
    scenario: Scenario, x, opts: SolverOptions | None = None, *, scenario_index: int | None = None
) -> float:
    """Q(x, xi): max <q, y> s.t. W y <= h - T x, y >= 0."""
    x = np.asarray(x, dtype=float)
    if x.shape != (scenario.T.shape[1],):
        raise ValueError(f"x has shape {x.shape}, expected ({scenario.T.shape[1]},)")
    problem = LpProblem(scenario.q, scenario.W, scenario.h - scenario.T @ x)
    return _recourse_value(solve_lp(problem, opts or RECOURSE_LP), scenario_index)


def solve_recourse_fixed_norm(
    scenario: Scenario, rho: float, opts: SolverOptions | None = None, *, scenario_index: int | None = None
) -> float:
    """Q(rho * e1, xi), the recourse value along the first coordinate axis."""
    if rho < 0:
        raise ValueError("rho must be non-negative")
    x = np.zeros(scenario.T.shape[1])
    x[0] = rho
    return solve_recourse_fixed_x(scenario, x, opts, scenario_index=scenario_index)


def expected_recourse(program: StochasticProgram, x, opts: SolverOptions | None = None) -> float:
    """sum_s P(s) Q(x, s), accumulated in scenario order."""
    total = 0.0
    for i, s in enumerate(program.scenarios):
        total += s.probability * solve_recourse_fixed_x(s, x, opts, scenario_index=i)
    return total


def expected_recourse_fixed_norm(
    program: StochasticProgram, rho: float, opts: SolverOptions | None = None
) -> float:
    total = 0.0
    for i, s in enumerate(program.scenarios):
        total += s.probability * solve_recourse_fixed_norm(s, rho, opts, scenario_index=i)
    return total


def _sweep_scenario(scenario: Scenario, index: int, norms: np.ndarray, ks: np.ndarray, opts) -> np.ndarray:
    """Q(rho e1) for an increasing sequence of rho, warm-starting each solve."""
    col = np.array(scenario.T[:, 0])
    solver = RevisedSimplex(scenario.q, scenario.W, scenario.h - norms[0] * col, opts)
    out = np.empty(norms.size)
    sol = solver.solve()
    out[0] = _recourse_value(sol, index, int(ks[0]))
    for j in range(1, norms.size):
        sol = solver.set_rhs(scenario.h - norms[j] * col)
        out[j] = _recourse_value(sol, index, int(ks[j]))
    return out


def first_stage_sweep(program: StochasticProgram, config: DecouplingConfig):
    """Z1[k], X[k] for k = 0..k_max and the norm of the uncapped optimum."""
    fs = program.first_stage
    free = solve_unconstrained_stage1(fs, config.ball)
    reach = config.delta * config.k_max
    if reach < free.norm * (1.0 - 1e-12):
        raise GridTooShort(reach, free.norm)
    K = config.k_max
    Z1 = np.empty(K + 1)
    X = np.empty(K + 1)
    face = None
    for k in range(K + 1):
        tau = config.delta * k
        if tau >= free.norm:
            Z1[k], X[k] = free.objective, free.norm
            continue
        sol = solve_ball_constrained(fs, tau, config.ball, face_hint=face)
        face = sol.face
        Z1[k], X[k] = sol.objective, sol.norm
    return Z1, X, free.norm


def run_decoupling(program: StochasticProgram, config: DecouplingConfig | None = None) -> DecouplingResult:
    """Grid-sweep estimate z_hat of the two-stage optimum.

    Raises GridTooShort when delta * k_max is below the norm of the uncapped
    first-stage optimum, and RecourseInfeasible / RecourseUnbounded (with the
    scenario and grid index) when a fixed-norm recourse problem is not solvable.
    """
    config = config or DecouplingConfig()
    Z1_all, X_all, free_norm = first_stage_sweep(program, config)
    tol = config.ball.lp.obj_tol
    if np.any(np.diff(Z1_all) < -tol * (1.0 + np.abs(Z1_all[1:]))):
        raise NumericalFailure("first-stage objective decreased along the tau grid")
    expected_X = np.minimum(config.delta * np.arange(Z1_all.size), free_norm)
    if np.max(np.abs(X_all - expected_X)) > 1e-6:
        raise NumericalFailure("norm-capped first-stage solutions do not saturate the cap")

    a = float(X_all.max())
    k_eff = min(config.k_max, math.ceil(a / config.delta) + 2)
    Z1 = Z1_all[: k_eff + 1]
    X = X_all[: k_eff + 1]

    # equal norms (the saturated tail) share one recourse solve
    norms, inverse = np.unique(X, return_inverse=True)
    first_k = np.array([int(np.flatnonzero(inverse == j)[0]) for j in range(norms.size)])

    def sweep(item):
        i, s = item
        return _sweep_scenario(s, i, norms, first_k, config.lp)

    items = list(enumerate(program.scenarios))
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            table = list(pool.map(sweep, items))
    else:
        table = [sweep(it) for it in items]

    expected = np.zeros(norms.size)
    for s, row in zip(program.scenarios, table):
        expected += s.probability * row
    Z2_expected = expected[inverse]
    Z = Z1 + Z2_expected
    best_k = int(np.argmax(Z))
    return DecouplingResult(
        Z1=Z1,
        X=X,
        Z2_expected=Z2_expected,
        Z=Z,
        best_k=best_k,
        z_hat=float(Z[best_k]),
        k_max_effective=k_eff,
        x_tilde_norm=free_norm,
        Z2=np.vstack(table)[:, inverse] if config.keep_table else None,
    )


def _sphere_directions(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    z = rng.standard_normal((count, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def estimate_invariance_epsilon(
    program: StochasticProgram,
    rho: float,
    num_probes: int = 20,
    seed: int = 0,
    *,
    sampler=None,
    opts: SolverOptions | None = None,
) -> InvarianceEstimate:
    """Largest observed |E Q(rho u) - E Q(rho e1)| over random unit directions u.

    ``sampler(rng, n, count)`` may replace the uniform-on-the-sphere draw.
    """
    if rho < 0 or num_probes < 1:
        raise ValueError("need rho >= 0 and num_probes >= 1")
    n1 = program.first_stage.n1
    rng = np.random.default_rng(seed)
    directions = (sampler or _sphere_directions)(rng, n1, num_probes)
    axis = np.zeros(n1)
    axis[0] = rho
    reference = expected_recourse(program, axis, opts)
    deviations = np.array([abs(expected_recourse(program, rho * u, opts) - reference) for u in directions])
    return InvarianceEstimate(
        epsilon_hat=float(deviations.max()),
        num_probes=num_probes,
        norm_tested=float(rho),
        mean_recourse=reference,
        deviations=deviations,
    )


def monotonicity_defect(program: StochasticProgram, rhos, opts: SolverOptions | None = None) -> float:
    """max over rho_i <= rho_j of E Q(rho_j e1) - E Q(rho_i e1), floored at 0.

    An empirical stand-in for the tolerance of approximate monotonicity on the
    ladder ``rhos``.
    """
    rhos = np.sort(np.asarray(rhos, dtype=float))
    values = np.array([expected_recourse_fixed_norm(program, r, opts) for r in rhos])
    running_min = np.minimum.accumulate(values)
    return float(max(0.0, np.max(values - running_min)))

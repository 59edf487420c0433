"""Single-cut L-shaped (Benders) decomposition for the two-stage program.

The master problem is

    maximize <c, x> + theta  s.t.  A x <= b,  x >= 0,  theta <= U,  cuts

where each optimality cut reads ``theta <= intercept + <gradient, x>``.  To
keep every master variable non-negative, theta is written as ``U - t`` with
``t >= 0``; the bound ``theta <= U`` is then implicit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, MasterUnbounded, NotConverged, RecourseInfeasible, RecourseUnbounded, UnboundedError
from .linprog import LpStatus, RevisedSimplex, SolverOptions
from .model import StochasticProgram, max_feasible_norm

log = logging.getLogger(__name__)

FALLBACK_THETA_BOUND = 1e9


@dataclass(frozen=True)
class OptimalityCut:
    gradient: np.ndarray
    intercept: float
    # master proposal the cut was generated at
    origin: np.ndarray | None = None

    def value(self, x) -> float:
        return float(self.intercept + self.gradient @ np.asarray(x, dtype=float))


@dataclass
class BendersResult:
    objective: float
    x_best: np.ndarray
    iterations: int
    gap_history: list[tuple[float, float]] = field(default_factory=list)
    converged: bool = False
    cuts: list[OptimalityCut] = field(default_factory=list)
    theta_bound: float = FALLBACK_THETA_BOUND

    @property
    def upper_bounds(self) -> np.ndarray:
        return np.array([ub for ub, _ in self.gap_history])


def relative_gap(upper: float, incumbent: float) -> float:
    """(upper - incumbent) relative to the smaller of the two magnitudes.

    The optimum lies between the bounds, so when both share a sign this also
    bounds the incumbent's relative distance from the optimum.
    """
    denom = max(min(abs(upper), abs(incumbent)), 1e-6)
    return (upper - incumbent) / denom


def theta_upper_bound(program: StochasticProgram, opts: SolverOptions | None = None) -> float:
    """Valid upper bound on E Q(x) over the first-stage polytope.

    For |x|_2 <= R every row of T x is at most |T|_F R in magnitude, so the
    recourse LP with right-hand side ``h + |T|_F R`` relaxes Q(x, xi).
    """
    try:
        R = max_feasible_norm(program.first_stage, opts)
    except UnboundedError:
        log.warning("first stage unbounded; using theta bound %g", FALLBACK_THETA_BOUND)
        return FALLBACK_THETA_BOUND
    total = 0.0
    for i, s in enumerate(program.scenarios):
        slack = np.linalg.norm(s.T) * R
        sol = RevisedSimplex(s.q, s.W, s.h + slack, opts).solve()
        if sol.status is not LpStatus.OPTIMAL:
            log.warning("bounding LP for scenario %d is %s; using theta bound %g", i, sol.status.value, FALLBACK_THETA_BOUND)
            return FALLBACK_THETA_BOUND
        total += s.probability * sol.objective
    return total


def run_benders(
    program: StochasticProgram,
    gap_tol: float = 0.02,
    max_iters: int = 500,
    opts: SolverOptions | None = None,
) -> BendersResult:
    """L-shaped method with one aggregated optimality cut per iteration.

    Stops when ``relative_gap(master bound, best incumbent) <= gap_tol``.
    Raises RecourseInfeasible/RecourseUnbounded at a master proposal that has
    no finite recourse (no feasibility cuts are generated), MasterUnbounded,
    and NotConverged after ``max_iters`` iterations.
    """
    opts = opts or SolverOptions(method="revised")
    fs = program.first_stage
    n1 = fs.n1
    U = theta_upper_bound(program, opts)
    master = RevisedSimplex(
        np.concatenate([fs.c, [-1.0]]),
        np.hstack([fs.A, np.zeros((fs.m1, 1))]),
        fs.b,
        opts,
    )
    subs = [RevisedSimplex(s.q, s.W, s.h, opts) for s in program.scenarios]
    result = BendersResult(objective=-np.inf, x_best=np.zeros(n1), iterations=0, theta_bound=U)

    sol = master.solve()
    for it in range(1, max_iters + 1):
        if sol.status is LpStatus.INFEASIBLE:
            raise InfeasibleError("master problem is infeasible")
        if sol.status is LpStatus.UNBOUNDED:
            raise MasterUnbounded("master problem is unbounded")
        x = sol.primal[:n1]
        upper = sol.objective + U
        intercept = 0.0
        gradient = np.zeros(n1)
        expected = 0.0
        for i, (s, sub) in enumerate(zip(program.scenarios, subs)):
            r = sub.set_rhs(s.h - s.T @ x)
            if r.status is LpStatus.INFEASIBLE:
                raise RecourseInfeasible(f"recourse infeasible at master proposal x={x.tolist()}", scenario=i)
            if r.status is LpStatus.UNBOUNDED:
                raise RecourseUnbounded("recourse unbounded at master proposal", scenario=i)
            expected += s.probability * r.objective
            intercept += s.probability * float(r.duals @ s.h)
            gradient -= s.probability * (s.T.T @ r.duals)
        value = float(fs.c @ x) + expected
        if value > result.objective:
            result.objective = value
            result.x_best = x.copy()
        result.iterations = it
        result.gap_history.append((upper, result.objective))
        if relative_gap(upper, result.objective) <= gap_tol:
            result.converged = True
            return result
        cut = OptimalityCut(gradient=gradient, intercept=intercept, origin=x.copy())
        result.cuts.append(cut)
        # U - t <= intercept + gradient.x   <=>   -gradient.x - t <= intercept - U
        sol = master.add_rows(np.concatenate([-gradient, [-1.0]]), intercept - U)
    raise NotConverged(result)

"""Extensive-form and naive-decoupling reference solutions.

The extensive LP stacks the variables as ``(x, y(1), ..., y(S))`` and the rows
as ``A x <= b`` followed by ``T(s) x + W(s) y(s) <= h(s)`` for each scenario
in index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ballstage import solve_unconstrained_stage1
from .decouple import solve_recourse_fixed_x
from .errors import InfeasibleError, UnboundedError
from .linprog import LpProblem, LpStatus, SolverOptions, solve_lp
from .model import StochasticProgram


@dataclass
class ExtensiveSolution:
    objective: float
    x_star: np.ndarray
    y_star: list[np.ndarray]
    build_stats: dict = field(default_factory=dict)


def build_extensive(program: StochasticProgram) -> LpProblem:
    m1, n1, m2, n2 = program.dims
    S = len(program.scenarios)
    rows = m1 + S * m2
    cols = n1 + S * n2
    G = np.zeros((rows, cols))
    g = np.empty(rows)
    obj = np.empty(cols)
    fs = program.first_stage
    G[:m1, :n1] = fs.A
    g[:m1] = fs.b
    obj[:n1] = fs.c
    for s, sc in enumerate(program.scenarios):
        r0 = m1 + s * m2
        c0 = n1 + s * n2
        G[r0 : r0 + m2, :n1] = sc.T
        G[r0 : r0 + m2, c0 : c0 + n2] = sc.W
        g[r0 : r0 + m2] = sc.h
        obj[c0 : c0 + n2] = sc.probability * sc.q
    return LpProblem(obj, G, g)


def solve_extensive(program: StochasticProgram, opts: SolverOptions | None = None) -> ExtensiveSolution:
    """Solve the deterministic equivalent in one LP call."""
    problem = build_extensive(program)
    sol = solve_lp(problem, opts)
    if sol.status is LpStatus.INFEASIBLE:
        raise InfeasibleError("extensive form is infeasible")
    if sol.status is LpStatus.UNBOUNDED:
        raise UnboundedError("extensive form is unbounded")
    _, n1, _, n2 = program.dims
    z = sol.primal
    ys = [z[n1 + s * n2 : n1 + (s + 1) * n2] for s in range(len(program.scenarios))]
    rows, cols = problem.shape
    return ExtensiveSolution(
        objective=sol.objective,
        x_star=z[:n1],
        y_star=ys,
        build_stats={"rows": rows, "cols": cols, "iterations": sol.iterations},
    )


def run_naive(program: StochasticProgram, opts: SolverOptions | None = None) -> float:
    """<c, x~> + E Q(x~, xi) with x~ the optimum of the first stage alone."""
    x = solve_unconstrained_stage1(program.first_stage).x_tau
    total = float(program.first_stage.c @ x)
    for i, s in enumerate(program.scenarios):
        total += s.probability * solve_recourse_fixed_x(s, x, opts, scenario_index=i)
    return total


def ngap_pct(z_extensive: float, z_naive: float) -> float:
    """Signed relative shortfall of the naive value, in percent."""
    return _percent(z_extensive - z_naive, z_extensive)


def dgap_pct(z_extensive: float, z_hat: float) -> float:
    """Absolute relative error of the decoupled estimate, in percent."""
    return _percent(abs(z_extensive - z_hat), z_extensive)


def _percent(diff: float, reference: float) -> float:
    # a zero optimum leaves the relative gap undefined unless the values agree
    if reference == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / abs(reference) * 100.0

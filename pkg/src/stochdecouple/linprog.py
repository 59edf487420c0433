"""Dense linear programming core.

Every LP in the package has the canonical shape

    maximize <c, x>  subject to  G x <= g,  x >= 0

and goes through :func:`solve_lp` or, when a sequence of related problems is
solved (changing right-hand sides, added cuts), through a warm-started
:class:`RevisedSimplex` instance.

The in-house engine is a revised simplex method on the slack-augmented form
``[G I] [x; s] = g`` with an explicitly maintained basis inverse.  Phase I
uses one artificial column per row with a negative right-hand side.  Pricing
is Dantzig's rule until ``2 (m + n)`` consecutive degenerate pivots have been
seen, after which Bland's smallest-index rule is used for the rest of the
solve.  Warm starts use the dual simplex method whenever the stored basis is
still dual feasible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailure

__all__ = [
    "LpProblem",
    "LpSolution",
    "LpStatus",
    "RevisedSimplex",
    "SolverOptions",
    "VerificationReport",
    "solve_lp",
    "verify_solution",
]


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-9
    obj_tol: float = 1e-7
    pivot_tol: float = 1e-10
    max_iterations: int | None = None
    # "revised" (in-house), "highs" (scipy), or "auto": revised below the size threshold.
    method: str = "auto"
    auto_threshold: int = 250_000
    refactor_every: int = 50
    # refactor before accepting an optimum once this many eta updates piled up
    verify_after: int = 8

    def iteration_limit(self, m: int, n: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return 50 * (m + n) + 1000


@dataclass(frozen=True)
class LpProblem:
    """maximize <objective, x> s.t. constraint_matrix @ x <= rhs, x >= 0."""

    objective: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        g = np.asarray(self.rhs, dtype=float).reshape(-1)
        G = np.asarray(self.constraint_matrix, dtype=float)
        if G.ndim == 1 and G.size == 0:
            G = G.reshape(0, c.size)
        if G.ndim != 2:
            raise ValueError("constraint_matrix must be two-dimensional")
        if G.shape != (g.size, c.size):
            raise ValueError(
                f"constraint_matrix has shape {G.shape}, expected ({g.size}, {c.size})"
            )
        for name, arr in (("objective", c), ("constraint_matrix", G), ("rhs", g)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", G)
        object.__setattr__(self, "rhs", g)

    @property
    def shape(self) -> tuple[int, int]:
        return self.constraint_matrix.shape


@dataclass
class LpSolution:
    status: LpStatus
    primal: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass
class VerificationReport:
    primal_infeasibility: float
    dual_infeasibility: float
    duality_gap: float
    complementary_slackness: float
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        t = self.tolerances
        return (
            self.primal_infeasibility <= t["primal"]
            and self.dual_infeasibility <= t["dual"]
            and self.duality_gap <= t["gap"]
            and self.complementary_slackness <= t["slackness"]
        )

    def __bool__(self) -> bool:
        return self.passed


class RevisedSimplex:
    """Revised simplex solver that keeps its basis between calls.

    Variables are indexed as structural ``0..n-1``, slacks ``n..n+m-1`` and,
    during Phase I only, artificials after the slacks.  The constraint matrix
    is held implicitly as ``G`` plus identity slack columns.
    """

    def __init__(self, objective, constraint_matrix, rhs, options: SolverOptions | None = None):
        self.opts = options or SolverOptions()
        self.c = np.array(objective, dtype=float).reshape(-1)
        self.n = self.c.size
        G = np.array(constraint_matrix, dtype=float)
        self.G = G.reshape(-1, self.n) if G.size else np.zeros((0, self.n))
        self.g = np.array(rhs, dtype=float).reshape(-1)
        if self.G.shape[0] != self.g.size:
            raise ValueError("row count of constraint_matrix and rhs length differ")
        self.m = self.g.size
        self.iterations = 0
        self._warm = False
        self._art_rows = np.zeros(0, dtype=int)
        self.basis = np.zeros(0, dtype=int)
        self.B_inv = np.zeros((0, 0))
        self.x_B = np.zeros(0)
        self.status: LpStatus | None = None

    @classmethod
    def from_problem(cls, problem: LpProblem, options: SolverOptions | None = None):
        return cls(problem.objective, problem.constraint_matrix, problem.rhs, options)

    # -- public API ---------------------------------------------------------

    def solve(self) -> LpSolution:
        """Solve from the stored basis when possible, otherwise from scratch."""
        if not self._warm:
            return self._cold_solve()
        return self._optimize(self.c)

    def set_rhs(self, rhs) -> LpSolution:
        self.g = np.array(rhs, dtype=float).reshape(-1)
        if self.g.size != self.m:
            raise ValueError("rhs length changed")
        if self._warm:
            self.x_B = self.B_inv @ self.g
        return self.solve()

    def set_objective(self, objective) -> LpSolution:
        self.c = np.array(objective, dtype=float).reshape(-1)
        if self.c.size != self.n:
            raise ValueError("objective length changed")
        return self.solve()

    def add_rows(self, rows, rhs) -> LpSolution:
        """Append ``rows @ x <= rhs``; the new slacks enter the basis."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        k = rows.shape[0]
        if rows.shape[1] != self.n or rhs.size != k:
            raise ValueError("added rows have inconsistent shape")
        m_old = self.m
        self.G = np.vstack([self.G, rows])
        self.g = np.concatenate([self.g, rhs])
        self.m += k
        if self._warm:
            # Old slack indices n..n+m_old-1 are unchanged; new slacks follow them.
            a_B = np.zeros((k, m_old))
            structural = self.basis < self.n
            a_B[:, structural] = rows[:, self.basis[structural]]
            B_inv = np.zeros((self.m, self.m))
            B_inv[:m_old, :m_old] = self.B_inv
            B_inv[m_old:, :m_old] = -a_B @ self.B_inv
            B_inv[m_old:, m_old:] = np.eye(k)
            self.B_inv = B_inv
            self.basis = np.concatenate([self.basis, self.n + m_old + np.arange(k)])
            self.x_B = self.B_inv @ self.g
        return self.solve()

    # -- column access ------------------------------------------------------

    @property
    def _num_vars(self) -> int:
        return self.n + self.m + self._art_rows.size

    def _column(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.G[:, j].copy()
        col = np.zeros(self.m)
        if j < self.n + self.m:
            col[j - self.n] = 1.0
        else:
            col[self._art_rows[j - self.n - self.m]] = -1.0
        return col

    def _row_alpha(self, rho: np.ndarray) -> np.ndarray:
        """rho^T A over all variables."""
        out = np.empty(self._num_vars)
        out[: self.n] = rho @ self.G
        out[self.n : self.n + self.m] = rho
        out[self.n + self.m :] = -rho[self._art_rows]
        return out

    def _basis_matrix(self) -> np.ndarray:
        B = np.zeros((self.m, self.m))
        cols = np.arange(self.m)
        structural = self.basis < self.n
        B[:, structural] = self.G[:, self.basis[structural]]
        slack = (self.basis >= self.n) & (self.basis < self.n + self.m)
        B[self.basis[slack] - self.n, cols[slack]] = 1.0
        art = self.basis >= self.n + self.m
        B[self._art_rows[self.basis[art] - self.n - self.m], cols[art]] = -1.0
        return B

    def _refactor(self):
        if self.m:
            self.B_inv = np.linalg.inv(self._basis_matrix())
        self.x_B = self.B_inv @ self.g
        self._since_refactor = 0

    # -- driver -------------------------------------------------------------

    def _cold_solve(self) -> LpSolution:
        self.iterations = 0
        n, m = self.n, self.m
        neg = np.flatnonzero(self.g < 0)
        self._art_rows = neg
        self.basis = n + np.arange(m)
        self.basis[neg] = n + m + np.arange(neg.size)
        self._refactor()
        if neg.size:
            cost = np.zeros(self._num_vars)
            cost[n + m :] = -1.0
            self._run(cost, allow_restart=False)
            infeas = -float(cost[self.basis] @ self.x_B)
            scale = 1.0 + float(np.max(np.abs(self.g)))
            if self.status is not LpStatus.OPTIMAL or infeas > self.opts.feas_tol * scale:
                self._drop_artificials(force=True)
                self._warm = False
                self.status = LpStatus.INFEASIBLE
                return LpSolution(LpStatus.INFEASIBLE, iterations=self.iterations)
            self._drop_artificials()
        self._warm = True
        return self._optimize(self.c)

    def _drop_artificials(self, force: bool = False):
        n, m = self.n, self.m
        if not force:
            for r in range(m):
                if self.basis[r] < n + m:
                    continue
                alpha = self._row_alpha(self.B_inv[r])[: n + m]
                alpha[self.basis[self.basis < n + m]] = 0.0
                q = int(np.argmax(np.abs(alpha)))
                if abs(alpha[q]) <= self.opts.pivot_tol:
                    raise NumericalFailure("cannot drive artificial variable out of the basis")
                self._pivot(r, q, self.B_inv @ self._column(q))
        self._art_rows = np.zeros(0, dtype=int)
        if not force:
            self._refactor()

    def _optimize(self, c: np.ndarray) -> LpSolution:
        cost = np.concatenate([c, np.zeros(self.m)])
        self._run(cost, allow_restart=True)
        if self.status is None:
            return self._cold_solve()
        if self.status is LpStatus.UNBOUNDED:
            return LpSolution(LpStatus.UNBOUNDED, iterations=self.iterations)
        if self.status is LpStatus.INFEASIBLE:
            return LpSolution(LpStatus.INFEASIBLE, iterations=self.iterations)
        return self._extract(cost)

    def _extract(self, cost: np.ndarray) -> LpSolution:
        x = np.zeros(self.n)
        structural = self.basis < self.n
        x[self.basis[structural]] = np.maximum(self.x_B[structural], 0.0)
        y = np.maximum(cost[self.basis] @ self.B_inv, 0.0) if self.m else np.zeros(0)
        return LpSolution(
            LpStatus.OPTIMAL,
            primal=x,
            duals=y,
            objective=float(self.c @ x),
            iterations=self.iterations,
        )

    def _run(self, cost: np.ndarray, allow_restart: bool):
        """Pivot until optimal, infeasible or unbounded.

        Leaves ``self.status`` set, or ``None`` when the basis is neither primal
        nor dual feasible and ``allow_restart`` asks for a cold start.
        """
        opts = self.opts
        tol = opts.feas_tol
        limit = opts.iteration_limit(self.m, self.n)
        stall_limit = 2 * (self.m + self.n)
        degenerate = 0
        bland = False
        self._since_refactor = 0
        verified = False
        while True:
            if self.iterations >= limit:
                raise NumericalFailure(
                    f"simplex exceeded {limit} iterations on a {self.m}x{self.n} problem"
                )
            if self._since_refactor >= opts.refactor_every:
                self._refactor()
            y = cost[self.basis] @ self.B_inv if self.m else np.zeros(0)
            d = cost - self._row_alpha(y)
            d[self.basis] = 0.0
            primal_ok = self.m == 0 or self.x_B.min() >= -tol
            dual_ok = d.max(initial=0.0) <= tol
            if primal_ok and dual_ok:
                if verified or self._since_refactor < opts.verify_after:
                    self.status = LpStatus.OPTIMAL
                    return
                self._refactor()
                verified = True
                continue
            verified = False
            if primal_ok:
                step = self._primal_step(d, bland)
            elif dual_ok:
                step = self._dual_step(d, bland)
            elif allow_restart:
                self.status = None
                return
            else:
                raise NumericalFailure("Phase I basis lost primal feasibility")
            if step is None:
                return
            if step:
                degenerate = 0
            else:
                degenerate += 1
                if degenerate > stall_limit:
                    bland = True

    def _primal_step(self, d: np.ndarray, bland: bool):
        tol = self.opts.feas_tol
        if bland:
            q = int(np.flatnonzero(d > tol)[0])
        else:
            q = int(np.argmax(d))
        u = self.B_inv @ self._column(q)
        eligible = np.flatnonzero(u > self.opts.pivot_tol)
        if eligible.size == 0:
            self.status = LpStatus.UNBOUNDED
            self._warm = True
            return None
        ratios = np.maximum(self.x_B[eligible], 0.0) / u[eligible]
        best = ratios.min()
        ties = eligible[ratios <= best + 1e-12 * (1.0 + best)]
        if bland:
            r = int(ties[np.argmin(self.basis[ties])])
        else:
            r = int(ties[np.argmax(u[ties])])
        self._pivot(r, q, u)
        return best > tol

    def _dual_step(self, d: np.ndarray, bland: bool):
        tol = self.opts.feas_tol
        infeasible_rows = np.flatnonzero(self.x_B < -tol)
        if bland:
            r = int(infeasible_rows[np.argmin(self.basis[infeasible_rows])])
        else:
            r = int(infeasible_rows[np.argmin(self.x_B[infeasible_rows])])
        alpha = self._row_alpha(self.B_inv[r])
        alpha[self.basis] = 0.0
        eligible = np.flatnonzero(alpha < -self.opts.pivot_tol)
        if eligible.size == 0:
            self.status = LpStatus.INFEASIBLE
            return None
        ratios = np.minimum(d[eligible], 0.0) / alpha[eligible]
        best = ratios.min()
        ties = eligible[ratios <= best + 1e-12 * (1.0 + best)]
        if bland:
            q = int(ties.min())
        else:
            q = int(ties[np.argmin(alpha[ties])])
        self._pivot(r, q, self.B_inv @ self._column(q))
        return best > tol

    def _pivot(self, r: int, q: int, u: np.ndarray):
        pivot_row = self.B_inv[r] / u[r]
        self.B_inv -= np.outer(u, pivot_row)
        self.B_inv[r] = pivot_row
        self.basis[r] = q
        self.x_B = self.B_inv @ self.g
        self.iterations += 1
        self._since_refactor += 1


def _solve_highs(problem: LpProblem, opts: SolverOptions) -> LpSolution:
    from scipy.optimize import linprog
    from scipy.sparse import csr_matrix

    c, G, g = problem.objective, problem.constraint_matrix, problem.rhs
    # interior point + crossover: returns a basic solution, far faster than
    # HiGHS's simplex on the stacked scenario blocks
    res = linprog(
        -c,
        A_ub=csr_matrix(G) if G.shape[0] else None,
        b_ub=g if G.shape[0] else None,
        bounds=(0, None),
        method="highs-ipm",
        options={"primal_feasibility_tolerance": opts.feas_tol, "dual_feasibility_tolerance": opts.feas_tol},
    )
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, iterations=int(res.nit))
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, iterations=int(res.nit))
    if res.status != 0:
        raise NumericalFailure(f"HiGHS failed: {res.message}")
    x = np.maximum(res.x, 0.0)
    duals = np.maximum(-res.ineqlin.marginals, 0.0) if G.shape[0] else np.zeros(0)
    return LpSolution(LpStatus.OPTIMAL, primal=x, duals=duals, objective=float(c @ x), iterations=int(res.nit))


def solve_lp(problem: LpProblem, opts: SolverOptions | None = None) -> LpSolution:
    """Solve ``problem`` and return status, primal point and row duals.

    Raises :class:`NumericalFailure` if the iteration limit is exceeded.
    """
    opts = opts or SolverOptions()
    method = opts.method
    if method == "auto":
        m, n = problem.shape
        method = "revised" if m * n <= opts.auto_threshold else "highs"
    if method == "highs":
        return _solve_highs(problem, opts)
    if method != "revised":
        raise ValueError(f"unknown LP method {opts.method!r}")
    return RevisedSimplex.from_problem(problem, opts).solve()


def verify_solution(
    problem: LpProblem, solution: LpSolution, opts: SolverOptions | None = None
) -> VerificationReport:
    """Check primal/dual feasibility, the duality gap and complementary slackness."""
    opts = opts or SolverOptions()
    c, G, g = problem.objective, problem.constraint_matrix, problem.rhs
    x = np.asarray(solution.primal, dtype=float)
    y = np.asarray(solution.duals, dtype=float)
    row_slack = g - G @ x
    reduced = G.T @ y - c
    primal_inf = max(0.0, float(np.max(-row_slack, initial=0.0)), float(np.max(-x, initial=0.0)))
    dual_inf = max(0.0, float(np.max(-reduced, initial=0.0)), float(np.max(-y, initial=0.0)))
    primal_obj = float(c @ x)
    gap = abs(primal_obj - float(g @ y))
    slackness = max(
        float(np.max(np.abs(y * row_slack), initial=0.0)),
        float(np.max(np.abs(x * reduced), initial=0.0)),
    )
    scale_g = 1.0 + float(np.max(np.abs(g), initial=0.0))
    scale_c = 1.0 + float(np.max(np.abs(c), initial=0.0))
    tolerances = {
        "primal": opts.feas_tol * scale_g,
        "dual": opts.feas_tol * scale_c,
        "gap": opts.obj_tol * (1.0 + abs(primal_obj)),
        "slackness": opts.obj_tol * (1.0 + abs(primal_obj)),
    }
    return VerificationReport(primal_inf, dual_inf, gap, slackness, tolerances)

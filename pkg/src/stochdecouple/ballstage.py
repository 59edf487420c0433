"""First-stage LP with an added Euclidean norm cap.

    maximize <c, x>  s.t.  A x <= b,  |x|_2 <= tau,  x >= 0

The ball is handled by Kelley-style outer approximation: solve the LP
relaxation, and while the incumbent lies outside the ball add the tangent cut
``<x_k / |x_k|, x> <= tau`` and re-solve with the dual simplex method.

Pure cutting planes converge slowly once the optimal face has more than a few
free directions, so after every LP solve the exact maximizer of ``<c, x>`` on
the currently tight face intersected with the sphere is tried as well.  It is
accepted only if it is feasible and satisfies the KKT conditions of the convex
problem, in which case it is optimal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, MaxCutsExceeded, UnboundedError
from .linprog import LpStatus, RevisedSimplex, SolverOptions
from .model import FirstStageData


@dataclass(frozen=True)
class BallOptions:
    ball_tol: float = 1e-7
    max_cuts: int = 500
    polish: bool = True
    perturb_cost: bool = False
    perturb_seed: int = 0
    lp: SolverOptions = SolverOptions(method="revised")


@dataclass
class BallStageSolution:
    x_tau: np.ndarray
    objective: float
    norm: float
    tau: float
    cuts_used: int
    # unit normals of the cuts that were added, one per row
    cuts: np.ndarray | None = None
    # indices of tight constraints in the stacked system [A; -I] x <= [b; 0]
    face: tuple[int, ...] | None = None


def _cost(first_stage: FirstStageData, opts: BallOptions) -> np.ndarray:
    c = np.array(first_stage.c, dtype=float)
    if opts.perturb_cost:
        rng = np.random.default_rng(opts.perturb_seed)
        c = c + 1e-7 * np.linalg.norm(c) * rng.standard_normal(c.size)
    return c


def _stacked(first_stage: FirstStageData) -> tuple[np.ndarray, np.ndarray]:
    n = first_stage.n1
    return np.vstack([first_stage.A, -np.eye(n)]), np.concatenate([first_stage.b, np.zeros(n)])


def _face_maximizer(M_all, r_all, c, tau, face, feas_tol, max_steps):
    """Active-set search for max <c, x> on {M_F x = r_F, |x| = tau}.

    Starting from ``face``, adds the most violated constraint or drops the most
    negative multiplier until the point is feasible and KKT holds.  Returns
    ``(x, face)`` or ``None``.
    """
    n = c.size
    face = sorted(set(face))
    dual_tol = 1e-9 * (1.0 + float(np.linalg.norm(c)))
    for _ in range(max_steps):
        if face:
            M = M_all[face]
            r = r_all[face]
            M_pinv = np.linalg.pinv(M)
            x0 = M_pinv @ r
            if np.max(np.abs(M @ x0 - r)) > feas_tol * (1.0 + np.max(np.abs(r))):
                return None
            d = c - M_pinv @ (M @ c)
        else:
            M_pinv = np.zeros((n, 0))
            x0 = np.zeros(n)
            d = c.copy()
        n0 = float(np.linalg.norm(x0))
        nd = float(np.linalg.norm(d))
        if n0 >= tau or nd <= 1e-12:
            return None
        s = math.sqrt(tau * tau - n0 * n0)
        x = x0 + (s / nd) * d
        mu = nd / s
        lam = M_pinv.T @ (c - mu * x)
        viol = M_all @ x - r_all
        if face:
            viol[face] = -np.inf
        worst = int(np.argmax(viol))
        if viol[worst] > feas_tol * (1.0 + abs(r_all[worst])):
            face = sorted(face + [worst])
            continue
        if face and lam.min() < -dual_tol:
            face.pop(int(np.argmin(lam)))
            continue
        return x, tuple(face)
    return None


def solve_unconstrained_stage1(
    first_stage: FirstStageData, opts: BallOptions | None = None
) -> BallStageSolution:
    """Solve the first-stage LP without the norm cap; ``tau`` is set to +inf."""
    opts = opts or BallOptions()
    sol = RevisedSimplex(_cost(first_stage, opts), first_stage.A, first_stage.b, opts.lp).solve()
    if sol.status is LpStatus.INFEASIBLE:
        raise InfeasibleError("first-stage polytope is empty")
    if sol.status is LpStatus.UNBOUNDED:
        raise UnboundedError("first-stage LP is unbounded")
    x = sol.primal
    return BallStageSolution(
        x_tau=x,
        objective=float(first_stage.c @ x),
        norm=float(np.linalg.norm(x)),
        tau=math.inf,
        cuts_used=0,
        cuts=np.zeros((0, first_stage.n1)),
    )


def solve_ball_constrained(
    first_stage: FirstStageData,
    tau: float,
    opts: BallOptions | None = None,
    *,
    initial_cuts: np.ndarray | None = None,
    face_hint: tuple[int, ...] | None = None,
) -> BallStageSolution:
    """Maximize <c, x> over the first-stage polytope intersected with |x|_2 <= tau.

    ``initial_cuts`` are unit normals u (rows) preloaded as ``<u, x> <= tau``;
    any unit vector gives a valid cut for the ball, so these only speed up
    convergence.  They do not count towards ``max_cuts``.  ``face_hint`` is
    a starting active set for the exact face step, typically the ``face`` of
    a solve at a nearby tau.
    """
    opts = opts or BallOptions()
    if tau < 0:
        raise ValueError("tau must be non-negative")
    n = first_stage.n1
    c = _cost(first_stage, opts)
    if tau == 0.0:
        if np.any(first_stage.b < -opts.lp.feas_tol):
            raise InfeasibleError("x = 0 violates A x <= b")
        return BallStageSolution(np.zeros(n), 0.0, 0.0, 0.0, 0, np.zeros((0, n)))

    if opts.polish:
        M_all, r_all = _stacked(first_stage)
        max_steps = 2 * n + 10

        def polished(face):
            found = _face_maximizer(M_all, r_all, c, tau, face, opts.lp.feas_tol, max_steps)
            if found is None:
                return None
            x, face = found
            return BallStageSolution(
                x_tau=x,
                objective=float(first_stage.c @ x),
                norm=float(np.linalg.norm(x)),
                tau=float(tau),
                cuts_used=0,
                cuts=np.zeros((0, n)),
                face=face,
            )

        if face_hint is not None:
            hit = polished(face_hint)
            if hit is not None:
                return hit

    G, g = first_stage.A, first_stage.b
    preloaded = 0
    if initial_cuts is not None and len(initial_cuts):
        preloaded = len(initial_cuts)
        G = np.vstack([G, initial_cuts])
        g = np.concatenate([g, np.full(preloaded, tau)])
    solver = RevisedSimplex(c, G, g, opts.lp)
    sol = solver.solve()
    if sol.status is LpStatus.UNBOUNDED:
        # the ball bounds every coordinate by tau
        sol = solver.add_rows(np.eye(n), np.full(n, tau))
        preloaded += n
    cuts: list[np.ndarray] = []
    limit = tau * (1.0 + opts.ball_tol)
    while True:
        if sol.status is LpStatus.INFEASIBLE:
            raise InfeasibleError("first-stage polytope intersected with the ball is empty")
        x = sol.primal
        nrm = float(np.linalg.norm(x))
        if nrm <= limit:
            break
        if opts.polish:
            slack = r_all - M_all @ x
            tight = np.flatnonzero(slack <= opts.lp.feas_tol * (1.0 + np.abs(r_all)))
            hit = polished(tuple(tight))
            if hit is not None:
                hit.cuts_used = len(cuts)
                hit.cuts = solver.G[first_stage.m1 :]
                return hit
        if len(cuts) >= opts.max_cuts:
            raise MaxCutsExceeded(f"{len(cuts)} cuts at tau={tau:.6g}, |x|={nrm:.12g}")
        u = x / nrm
        cuts.append(u)
        sol = solver.add_rows(u, tau)

    all_cuts = solver.G[first_stage.m1 :] if solver.m > first_stage.m1 else np.zeros((0, n))
    M_all, r_all = _stacked(first_stage)
    slack = r_all - M_all @ x
    face = tuple(np.flatnonzero(slack <= opts.lp.feas_tol * (1.0 + np.abs(r_all))).tolist())
    return BallStageSolution(
        x_tau=x,
        objective=float(first_stage.c @ x),
        norm=nrm,
        tau=float(tau),
        cuts_used=len(cuts),
        cuts=all_cuts,
        face=face,
    )

"""Exception hierarchy shared by the solver modules."""

from __future__ import annotations


class StochDecoupleError(Exception):
    """Base class for every error raised by this package."""


class NumericalFailure(StochDecoupleError):
    """The simplex iteration limit was hit, even with Bland's rule engaged."""


class InfeasibleError(StochDecoupleError):
    pass


class UnboundedError(StochDecoupleError):
    pass


class MaxCutsExceeded(StochDecoupleError):
    pass


class AssumptionViolation(StochDecoupleError):
    """An input assumption of the two-stage model does not hold for this instance.

    ``scenario`` and ``k`` locate the failing recourse solve when known.
    """

    def __init__(self, message: str, *, scenario: int | None = None, k: int | None = None):
        self.scenario = scenario
        self.k = k
        context = []
        if scenario is not None:
            context.append(f"scenario={scenario}")
        if k is not None:
            context.append(f"k={k}")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class RecourseInfeasible(AssumptionViolation):
    pass


class RecourseUnbounded(AssumptionViolation):
    pass


class GridTooShort(StochDecoupleError):
    """delta * k_max does not reach the norm of the unconstrained first-stage optimum."""

    def __init__(self, reach: float, needed: float):
        self.reach = reach
        self.needed = needed
        super().__init__(f"grid reaches tau={reach:.6g} but the first-stage optimum has norm {needed:.6g}")


class MasterUnbounded(StochDecoupleError):
    pass


class NotConverged(StochDecoupleError):
    """Benders stopped at max_iters; ``result`` holds the best incumbent."""

    def __init__(self, result):
        self.result = result
        gap = result.gap_history[-1] if result.gap_history else None
        super().__init__(f"no convergence after {result.iterations} iterations (last bounds {gap})")


class ParseError(StochDecoupleError):
    pass


class ValidationError(StochDecoupleError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))

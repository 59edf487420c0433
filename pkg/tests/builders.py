"""Hand-built programs shared by several test modules."""

from __future__ import annotations

import numpy as np

from stochdecouple import FirstStageData, GeneratorConfig, Scenario, StochasticProgram, generate_gaussian_instance


def program(A, b, c, scenarios) -> StochasticProgram:
    """``scenarios`` is a list of (T, W, h, q, probability) tuples."""
    return StochasticProgram(
        FirstStageData(np.atleast_2d(A), np.atleast_1d(b), np.atleast_1d(c)),
        tuple(Scenario(np.atleast_2d(T), np.atleast_2d(W), np.atleast_1d(h), np.atleast_1d(q), p) for T, W, h, q, p in scenarios),
    )


def one_dim_program() -> StochasticProgram:
    """n1 = 1: max 0.5 x + Q(x) with x <= 1 and Q(x) = max{y : y <= 3 - x}."""
    return program([[1.0]], [1.0], [0.5], [([[1.0]], [[1.0]], [3.0], [1.0], 1.0)])


def gaussian(m1, n1, m2, n2, h, scenarios, seed, **kw) -> StochasticProgram:
    return generate_gaussian_instance(GeneratorConfig(m1, n1, m2, n2, h, num_scenarios=scenarios, seed=seed, **kw))


def zero_technology(program_: StochasticProgram) -> StochasticProgram:
    return StochasticProgram(
        program_.first_stage,
        tuple(Scenario(np.zeros_like(s.T), s.W, s.h, s.q, s.probability) for s in program_.scenarios),
    )

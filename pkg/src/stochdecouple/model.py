"""Two-stage stochastic program data, the Gaussian instance generator and file I/O.

Random streams
--------------
``generate_gaussian_instance`` derives independent substreams from
``numpy.random.SeedSequence(seed).spawn(3 + 2 * S)``, always in this order:

    0: A        1: c        2: q        3 + 2s: T(s)      4 + 2s: W(s)

Each substream drives a PCG64 bit generator.  Uniform doubles are
``(next_uint64 >> 11) * 2**-53`` (numpy's ``Generator.random``) and standard
normals are produced by the Box-Muller transform from consecutive pairs
``(u1, u2)`` as ``sqrt(-2 log(1 - u1)) * (cos(2 pi u2), sin(2 pi u2))``.
Matrices are filled row-major.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InfeasibleError, ParseError, UnboundedError, ValidationError
from .linprog import LpStatus, RevisedSimplex, SolverOptions

FORMAT_VERSION = 1


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if ndim == 2 and arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FirstStageData:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(self.A, 2))
        object.__setattr__(self, "b", _frozen(self.b, 1))
        object.__setattr__(self, "c", _frozen(self.c, 1))

    @property
    def m1(self) -> int:
        return self.A.shape[0]

    @property
    def n1(self) -> int:
        return self.c.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FirstStageData):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "Abc")


@dataclass(frozen=True, eq=False)
class Scenario:
    T: np.ndarray
    W: np.ndarray
    h: np.ndarray
    q: np.ndarray
    probability: float

    def __post_init__(self):
        for name in ("T", "W"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 2))
        for name in ("h", "q"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 1))
        object.__setattr__(self, "probability", float(self.probability))

    @property
    def m2(self) -> int:
        return self.W.shape[0]

    @property
    def n2(self) -> int:
        return self.W.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.probability == other.probability and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in "TWhq"
        )


@dataclass(frozen=True, eq=False)
class StochasticProgram:
    first_stage: FirstStageData
    scenarios: tuple[Scenario, ...]

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))

    @property
    def dims(self) -> tuple[int, int, int, int]:
        s0 = self.scenarios[0] if self.scenarios else None
        return (
            self.first_stage.m1,
            self.first_stage.n1,
            s0.m2 if s0 else 0,
            s0.n2 if s0 else 0,
        )

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])

    def __eq__(self, other):
        if not isinstance(other, StochasticProgram):
            return NotImplemented
        return self.first_stage == other.first_stage and self.scenarios == other.scenarios

    def __len__(self):
        return len(self.scenarios)


@dataclass(frozen=True)
class GeneratorConfig:
    m1: int
    n1: int
    m2: int
    n2: int
    h_magnitude: float
    num_scenarios: int = 50
    seed: int = 0
    # When set, A, c and q are drawn from this seed instead of ``seed``.
    first_stage_seed: int | None = None
    # Test hook: T(xi) = 0 for every scenario.
    zero_technology: bool = False

    def __post_init__(self):
        for name in ("m1", "n1", "m2", "n2", "num_scenarios"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def gaussian_matrix(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normal draws via Box-Muller on rng.random(), filled row-major."""
    size = int(np.prod(shape))
    pairs = (size + 1) // 2
    u = rng.random(2 * pairs).reshape(pairs, 2)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    angle = 2.0 * np.pi * u[:, 1]
    z = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]).reshape(-1)
    return z[:size].reshape(shape)


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed) % 2**64).spawn(count)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]


def generate_gaussian_instance(config: GeneratorConfig) -> StochasticProgram:
    """Draw an instance following the Gaussian protocol of the benchmark.

    ``b = 1``; ``A``, ``T(s)``, ``W(s)`` standard Gaussian; ``c`` and ``q``
    Gaussian rescaled to norms 0.5 and 1; ``h(s) = h_magnitude * 1``; equal
    probabilities.  ``q`` is shared by all scenarios.
    """
    S = config.num_scenarios
    streams = _streams(config.seed, 3 + 2 * S)
    if config.first_stage_seed is not None:
        streams[:3] = _streams(config.first_stage_seed, 3)
    A = gaussian_matrix(streams[0], (config.m1, config.n1))
    c = gaussian_matrix(streams[1], (config.n1,))
    c = 0.5 * c / np.linalg.norm(c)
    q = gaussian_matrix(streams[2], (config.n2,))
    q = q / np.linalg.norm(q)
    b = np.ones(config.m1)
    h = np.full(config.m2, float(config.h_magnitude))
    p = 1.0 / S
    scenarios = []
    for s in range(S):
        T = gaussian_matrix(streams[3 + 2 * s], (config.m2, config.n1))
        if config.zero_technology:
            T = np.zeros_like(T)
        W = gaussian_matrix(streams[4 + 2 * s], (config.m2, config.n2))
        scenarios.append(Scenario(T=T, W=W, h=h, q=q, probability=p))
    return StochasticProgram(FirstStageData(A=A, b=b, c=c), tuple(scenarios))


def validate(program: StochasticProgram) -> ValidationReport:
    """List every structural violation of ``program``; empty means valid."""
    out: list[str] = []
    fs = program.first_stage
    if fs.A.ndim != 2 or fs.A.shape != (fs.b.size, fs.c.size):
        out.append(f"first stage: A has shape {fs.A.shape}, expected ({fs.b.size}, {fs.c.size})")
    for name in "Abc":
        if not np.all(np.isfinite(getattr(fs, name))):
            out.append(f"first stage: {name} has non-finite entries")
    n1 = fs.c.size
    if not program.scenarios:
        out.append("no scenarios")
    ref = None
    for i, s in enumerate(program.scenarios):
        m2 = s.h.size
        n2 = s.q.size
        if ref is None:
            ref = (m2, n2)
        elif (m2, n2) != ref:
            out.append(f"scenario {i}: dimensions (m2, n2) = ({m2}, {n2}) differ from scenario 0 {ref}")
        if s.T.ndim != 2 or s.T.shape != (m2, n1):
            out.append(f"scenario {i}: T has shape {s.T.shape}, expected ({m2}, {n1})")
        if s.W.ndim != 2 or s.W.shape != (m2, n2):
            out.append(f"scenario {i}: W has shape {s.W.shape}, expected ({m2}, {n2})")
        for name in "TWhq":
            if not np.all(np.isfinite(getattr(s, name))):
                out.append(f"scenario {i}: {name} has non-finite entries")
        if not math.isfinite(s.probability) or s.probability < 0:
            out.append(f"scenario {i}: probability {s.probability!r} is not a non-negative number")
    total = math.fsum(s.probability for s in program.scenarios)
    if abs(total - 1.0) > 1e-12:
        out.append(f"probabilities sum to {total:.15g}")
    return ValidationReport(out)


# -- file format ---------------------------------------------------------------

_SCENARIO_FIELDS = ("T", "W", "h", "q", "probability")
_TOP_FIELDS = ("format_version", "m1", "n1", "m2", "n2", "A", "b", "c", "scenarios")


def program_to_dict(program: StochasticProgram) -> dict:
    m1, n1, m2, n2 = program.dims
    fs = program.first_stage
    return {
        "format_version": FORMAT_VERSION,
        "m1": m1,
        "n1": n1,
        "m2": m2,
        "n2": n2,
        "A": fs.A.tolist(),
        "b": fs.b.tolist(),
        "c": fs.c.tolist(),
        "scenarios": [
            {"T": s.T.tolist(), "W": s.W.tolist(), "h": s.h.tolist(), "q": s.q.tolist(), "probability": s.probability}
            for s in program.scenarios
        ],
    }


def save_instance(program: StochasticProgram, path) -> None:
    """Write ``program`` as JSON; floats use repr so the round trip is exact."""
    report = validate(program)
    if not report.ok:
        raise ValidationError(report.violations)
    Path(path).write_text(json.dumps(program_to_dict(program), indent=1) + "\n")


def _matrix(value, rows: int, cols: int, where: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: not a numeric matrix ({exc})") from None
    if rows * cols == 0 and arr.size == 0:
        return arr.reshape(rows, cols)
    if arr.shape != (rows, cols):
        raise ParseError(f"{where}: shape {arr.shape}, expected ({rows}, {cols})")
    return arr


def _vector(value, size: int, where: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: not a numeric vector ({exc})") from None
    if arr.shape != (size,):
        raise ParseError(f"{where}: shape {arr.shape}, expected ({size},)")
    return arr


def program_from_dict(data) -> StochasticProgram:
    if not isinstance(data, dict):
        raise ParseError("top level: expected an object")
    for key in _TOP_FIELDS:
        if key not in data:
            raise ParseError(f"missing field '{key}'")
    if data["format_version"] != FORMAT_VERSION:
        raise ParseError(f"field 'format_version': unsupported version {data['format_version']!r}")
    dims = {}
    for key in ("m1", "n1", "m2", "n2"):
        v = data[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ParseError(f"field '{key}': expected a non-negative integer, got {v!r}")
        dims[key] = v
    m1, n1, m2, n2 = dims["m1"], dims["n1"], dims["m2"], dims["n2"]
    fs = FirstStageData(
        A=_matrix(data["A"], m1, n1, "field 'A'"),
        b=_vector(data["b"], m1, "field 'b'"),
        c=_vector(data["c"], n1, "field 'c'"),
    )
    if not isinstance(data["scenarios"], list):
        raise ParseError("field 'scenarios': expected a list")
    scenarios = []
    for i, s in enumerate(data["scenarios"]):
        if not isinstance(s, dict):
            raise ParseError(f"scenarios[{i}]: expected an object")
        for key in _SCENARIO_FIELDS:
            if key not in s:
                raise ParseError(f"scenarios[{i}]: missing field '{key}'")
        p = s["probability"]
        if not isinstance(p, (int, float)) or isinstance(p, bool):
            raise ParseError(f"scenarios[{i}]: field 'probability' is not a number")
        scenarios.append(
            Scenario(
                T=_matrix(s["T"], m2, n1, f"scenarios[{i}].T"),
                W=_matrix(s["W"], m2, n2, f"scenarios[{i}].W"),
                h=_vector(s["h"], m2, f"scenarios[{i}].h"),
                q=_vector(s["q"], n2, f"scenarios[{i}].q"),
                probability=float(p),
            )
        )
    return StochasticProgram(fs, tuple(scenarios))


def load_instance(path) -> StochasticProgram:
    """Read and validate an instance file.

    Raises ParseError for malformed content and ValidationError for
    semantically invalid programs.
    """
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    program = program_from_dict(data)
    report = validate(program)
    if not report.ok:
        raise ValidationError(report.violations)
    return program


def max_feasible_norm(first_stage: FirstStageData, opts: SolverOptions | None = None) -> float:
    """Upper bound on max |x|_2 over {Ax <= b, x >= 0}.

    Computes u_j = max x_j with one LP per coordinate and returns |u|_2.
    Raises UnboundedError if some coordinate is unbounded.
    """
    n = first_stage.n1
    solver = RevisedSimplex(np.zeros(n), first_stage.A, first_stage.b, opts)
    upper = np.zeros(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        sol = solver.set_objective(e)
        if sol.status is LpStatus.UNBOUNDED:
            raise UnboundedError(f"first-stage coordinate x[{j}] is unbounded")
        if sol.status is LpStatus.INFEASIBLE:
            raise InfeasibleError("first-stage polytope is empty")
        upper[j] = sol.objective
    return float(np.linalg.norm(upper))

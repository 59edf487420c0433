import json
import math

import numpy as np
import pytest
from builders import gaussian

from stochdecouple import (
    FirstStageData,
    GeneratorConfig,
    InfeasibleError,
    ParseError,
    Scenario,
    StochasticProgram,
    UnboundedError,
    ValidationError,
    generate_gaussian_instance,
    load_instance,
    max_feasible_norm,
    save_instance,
    solve_unconstrained_stage1,
    validate,
)
from stochdecouple.model import program_from_dict, program_to_dict


def test_generator_normalisation():
    prog = gaussian(100, 5, 100, 5, 2.0, 50, seed=0)
    assert abs(np.linalg.norm(prog.first_stage.c) - 0.5) <= 1e-12
    assert np.array_equal(prog.first_stage.b, np.ones(100))
    for s in prog.scenarios:
        assert abs(np.linalg.norm(s.q) - 1.0) <= 1e-12
        assert s.probability == 0.02
        assert np.array_equal(s.h, np.full(100, 2.0))
    assert prog.dims == (100, 5, 100, 5)
    assert len(prog) == 50


def test_generator_deterministic():
    assert gaussian(10, 3, 8, 4, 2.0, 5, seed=42) == gaussian(10, 3, 8, 4, 2.0, 5, seed=42)
    assert gaussian(10, 3, 8, 4, 2.0, 5, seed=42) != gaussian(10, 3, 8, 4, 2.0, 5, seed=43)


def test_documented_stream_layout():
    # rebuild A and T(1) from raw PCG64 output with a hand-written Box-Muller
    seed, S = 99, 3
    prog = gaussian(4, 3, 2, 2, 1.0, S, seed=seed)
    children = np.random.SeedSequence(seed).spawn(3 + 2 * S)

    def normals(child, count):
        raw = np.random.PCG64(child).random_raw(count + count % 2)
        u = (raw >> np.uint64(11)).astype(float) * 2.0**-53
        out = []
        for u1, u2 in zip(u[0::2], u[1::2]):
            r = math.sqrt(-2.0 * math.log(1.0 - u1))
            out += [r * math.cos(2 * math.pi * u2), r * math.sin(2 * math.pi * u2)]
        return np.array(out[:count])

    np.testing.assert_allclose(prog.first_stage.A.ravel(), normals(children[0], 12), rtol=1e-14)
    np.testing.assert_allclose(prog.scenarios[1].T.ravel(), normals(children[3 + 2], 6), rtol=1e-14)
    np.testing.assert_allclose(prog.scenarios[2].W.ravel(), normals(children[4 + 4], 4), rtol=1e-14)


def test_technology_moments_over_seeds():
    entries = np.concatenate(
        [s.T.ravel() for seed in range(1000) for s in gaussian(3, 2, 3, 2, 1.0, 2, seed=seed).scenarios]
    )
    stderr = 1.0 / math.sqrt(entries.size)
    assert abs(entries.mean()) <= 3 * stderr
    assert abs(entries.var(ddof=1) - 1.0) <= 0.1


def test_distinct_seeds_give_distinct_first_stages():
    keys = {gaussian(5, 3, 2, 2, 1.0, 1, seed=s).first_stage.A.tobytes() for s in range(100)}
    assert len(keys) == 100


def test_first_stage_seed_shares_a_c_q():
    a = gaussian(6, 3, 4, 2, 2.0, 2, seed=1, first_stage_seed=5)
    b = gaussian(6, 3, 4, 2, 2.0, 2, seed=2, first_stage_seed=5)
    assert a.first_stage == b.first_stage
    assert np.array_equal(a.scenarios[0].q, b.scenarios[0].q)
    assert not np.array_equal(a.scenarios[0].T, b.scenarios[0].T)


def test_generator_config_rejects_zero_counts():
    with pytest.raises(ValueError):
        GeneratorConfig(0, 1, 1, 1, 1.0)


class TestValidate:
    def test_generator_output_valid(self):
        assert validate(gaussian(7, 3, 5, 4, 2.0, 4, seed=3)).violations == []

    def test_probability_sum(self):
        fs = FirstStageData([[1.0]], [1.0], [1.0])
        sc = [Scenario([[1.0]], [[1.0]], [1.0], [1.0], p) for p in (0.5, 0.6)]
        report = validate(StochasticProgram(fs, sc))
        assert not report.ok
        assert "probabilities sum to 1.1" in report.violations

    def test_wrong_technology_columns_names_scenario(self):
        fs = FirstStageData([[1.0, 1.0]], [1.0], [1.0, 1.0])
        good = Scenario([[1.0, 0.0]], [[1.0]], [1.0], [1.0], 0.5)
        bad = Scenario([[1.0, 0.0, 2.0]], [[1.0]], [1.0], [1.0], 0.5)
        report = validate(StochasticProgram(fs, [good, bad]))
        assert len(report.violations) == 1
        assert "scenario 1" in report.violations[0] and "T" in report.violations[0]

    def test_non_finite(self):
        fs = FirstStageData([[np.nan]], [1.0], [1.0])
        sc = Scenario([[1.0]], [[1.0]], [np.inf], [1.0], 1.0)
        report = validate(StochasticProgram(fs, [sc]))
        assert any("first stage: A" in v for v in report.violations)
        assert any("scenario 0: h" in v for v in report.violations)

    def test_no_scenarios(self):
        report = validate(StochasticProgram(FirstStageData([[1.0]], [1.0], [1.0]), []))
        assert "no scenarios" in report.violations


class TestFileFormat:
    def test_round_trip_many(self, tmp_path):
        rng = np.random.default_rng(0)
        for i in range(100):
            m1, n1, m2, n2, S = (int(v) for v in rng.integers(1, 6, size=5))
            prog = gaussian(m1, n1, m2, n2, float(rng.uniform(0.5, 5)), S, seed=i)
            path = tmp_path / f"p{i}.json"
            save_instance(prog, path)
            assert load_instance(path) == prog

    def test_field_set(self, tmp_path):
        data = program_to_dict(gaussian(2, 2, 2, 2, 1.0, 1, seed=0))
        assert set(data) == {"format_version", "m1", "n1", "m2", "n2", "A", "b", "c", "scenarios"}
        assert set(data["scenarios"][0]) == {"T", "W", "h", "q", "probability"}

    def test_missing_scenario_field(self, tmp_path):
        data = program_to_dict(gaussian(2, 2, 2, 2, 1.0, 2, seed=0))
        del data["scenarios"][1]["W"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ParseError, match=r"scenarios\[1\].*'W'"):
            load_instance(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n "m1": 1,\n "n1": ]\n}')
        with pytest.raises(ParseError, match="line 3"):
            load_instance(path)

    def test_wrong_shape(self):
        data = program_to_dict(gaussian(2, 2, 2, 2, 1.0, 1, seed=0))
        data["A"] = [[1.0, 2.0]]
        with pytest.raises(ParseError, match="'A'"):
            program_from_dict(data)

    def test_probabilities_summing_to_point_nine(self, tmp_path):
        data = program_to_dict(gaussian(2, 2, 2, 2, 1.0, 2, seed=0))
        data["scenarios"][0]["probability"] = 0.4
        path = tmp_path / "p.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ValidationError) as info:
            load_instance(path)
        assert any("0.9" in v for v in info.value.violations)

    def test_save_rejects_invalid(self, tmp_path):
        fs = FirstStageData([[1.0]], [1.0], [1.0])
        prog = StochasticProgram(fs, [Scenario([[1.0]], [[1.0]], [1.0], [1.0], 0.3)])
        with pytest.raises(ValidationError):
            save_instance(prog, tmp_path / "x.json")


class TestMaxFeasibleNorm:
    def test_box(self):
        assert max_feasible_norm(FirstStageData(np.eye(2), [1.0, 1.0], [0.0, 0.0])) == pytest.approx(math.sqrt(2))

    def test_simplex_overbound(self):
        assert max_feasible_norm(FirstStageData([[1.0, 1.0]], [1.0], [0.0, 0.0])) == pytest.approx(math.sqrt(2))

    def test_zero_row_plus_box(self):
        n = 3
        A = np.vstack([np.zeros((1, n)), np.eye(n)])
        b = np.concatenate([[0.5], np.full(n, 2.0)])
        assert max_feasible_norm(FirstStageData(A, b, np.zeros(n))) == pytest.approx(2 * math.sqrt(n))

    def test_unbounded(self):
        with pytest.raises(UnboundedError):
            max_feasible_norm(FirstStageData([[1.0, -1.0]], [1.0], [0.0, 0.0]))

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            max_feasible_norm(FirstStageData([[1.0]], [-1.0], [0.0]))

    def test_bounds_first_stage_optimum(self):
        checked = 0
        for seed in range(40):
            fs = gaussian(30, 5, 1, 1, 1.0, 1, seed=seed).first_stage
            try:
                bound = max_feasible_norm(fs)
            except UnboundedError:
                continue
            assert bound >= solve_unconstrained_stage1(fs).norm - 1e-9
            checked += 1
        assert checked >= 20

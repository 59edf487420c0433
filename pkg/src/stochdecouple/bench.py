"""Benchmark harness: extensive form vs. decoupling vs. naive vs. Benders.

Every (cell, run) pair draws its own instance from a seed derived from
``(seed_base, m1, n1, m2, n2, h, run)``; an instance violating the recourse
assumptions is redrawn with ``seed + 1``.  Gap columns are therefore a pure
function of the configuration, while the timing columns are wall-clock and
not reproducible.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import dgap_pct, ngap_pct, run_naive, solve_extensive
from .decouple import DecouplingConfig, run_decoupling
from .errors import AssumptionViolation, GridTooShort, InfeasibleError, NotConverged, UnboundedError
from .lshaped import run_benders
from .model import GeneratorConfig, generate_gaussian_instance

log = logging.getLogger(__name__)

CSV_HEADER = ["m1", "n1", "m2", "n2", "h", "Ngap", "Dgap", "t_e", "t_d", "t_b", "runs", "resamples"]
MAX_CONSECUTIVE_RESAMPLES = 10


@dataclass(frozen=True)
class BenchConfig:
    n_values: tuple[int, ...] = (5, 10, 15, 20)
    h_values: tuple[float, ...] = (2.0, 3.0, 4.0, 5.0)
    m1: int = 100
    m2: int = 100
    runs: int = 50
    num_scenarios: int = 50
    delta: float = 0.01
    k_max: int = 100
    gap_tol: float = 0.02
    seed_base: int = 0
    fixed_first_stage: bool = False
    threads: int | None = None
    warmup: bool = True
    zero_technology: bool = False

    def cells(self) -> list[tuple[int, int, int, int, float]]:
        return [(self.m1, n, self.m2, n, float(h)) for h in self.h_values for n in self.n_values]


@dataclass
class RunSample:
    seed: int
    z_extensive: float
    z_hat: float
    z_naive: float
    z_benders: float
    ngap_pct: float
    dgap_pct: float
    t_extensive_s: float
    t_decouple_s: float
    t_benders_s: float
    benders_converged: bool
    resamples: int


@dataclass
class BenchmarkRecord:
    m1: int
    n1: int
    m2: int
    n2: int
    h_magnitude: float
    ngap_pct: float
    dgap_pct: float
    t_extensive_s: float
    t_decouple_s: float
    t_benders_s: float
    runs: int
    seed_base: int = 0
    resample_events: int = 0
    failed: bool = False
    samples: list[RunSample] = field(default_factory=list, repr=False)

    def csv_row(self) -> list[str]:
        return [
            str(self.m1),
            str(self.n1),
            str(self.m2),
            str(self.n2),
            repr(float(self.h_magnitude)),
            repr(float(self.ngap_pct)),
            repr(float(self.dgap_pct)),
            repr(float(self.t_extensive_s)),
            repr(float(self.t_decouple_s)),
            repr(float(self.t_benders_s)),
            str(self.runs),
            str(self.resample_events),
        ]


def instance_seed(seed_base: int, cell: tuple, run: int) -> int:
    m1, n1, m2, n2, h = cell
    key = [int(seed_base) % 2**63, m1, n1, m2, n2, int(round(h * 1_000_000)), run]
    return int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)[0] >> 1)


def _first_stage_seed(config: BenchConfig) -> int | None:
    if not config.fixed_first_stage:
        return None
    return int(np.random.SeedSequence([int(config.seed_base) % 2**63, 0xF1]).generate_state(1, dtype=np.uint64)[0] >> 1)


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def _decouple_with_retry(program, config: DecouplingConfig):
    while True:
        try:
            return run_decoupling(program, config)
        except GridTooShort:
            config = replace(config, k_max=2 * config.k_max)
            log.info("grid too short, retrying with k_max=%d", config.k_max)


def run_once(config: BenchConfig, cell: tuple, run: int) -> RunSample | None:
    """Solve one draw with all four methods; ``None`` if resampling gave up."""
    m1, n1, m2, n2, h = cell
    seed = instance_seed(config.seed_base, cell, run)
    dec_config = DecouplingConfig(delta=config.delta, k_max=config.k_max)
    for attempt in range(MAX_CONSECUTIVE_RESAMPLES + 1):
        gen = GeneratorConfig(
            m1, n1, m2, n2, h,
            num_scenarios=config.num_scenarios,
            seed=seed + attempt,
            first_stage_seed=_first_stage_seed(config),
            zero_technology=config.zero_technology,
        )
        program = generate_gaussian_instance(gen)
        try:
            ext, t_e = _timed(solve_extensive, program)
            dec, t_d = _timed(_decouple_with_retry, program, dec_config)
            naive = run_naive(program)
            try:
                ben, t_b = _timed(run_benders, program, gap_tol=config.gap_tol)
            except NotConverged as exc:
                ben, t_b = exc.result, math.nan
        except (AssumptionViolation, InfeasibleError, UnboundedError) as exc:
            log.info("cell %s run %d: resampling after %s", cell, run, exc)
            continue
        return RunSample(
            seed=seed + attempt,
            z_extensive=ext.objective,
            z_hat=dec.z_hat,
            z_naive=naive,
            z_benders=ben.objective,
            ngap_pct=ngap_pct(ext.objective, naive),
            dgap_pct=dgap_pct(ext.objective, dec.z_hat),
            t_extensive_s=t_e,
            t_decouple_s=t_d,
            t_benders_s=t_b,
            benders_converged=ben.converged,
            resamples=attempt,
        )
    log.warning("cell %s run %d: giving up after %d resamples", cell, run, MAX_CONSECUTIVE_RESAMPLES)
    return None


def _task(args):
    config, cell, run = args
    return run_once(config, cell, run)


def _aggregate(config: BenchConfig, cell, samples: list[RunSample | None]) -> BenchmarkRecord:
    m1, n1, m2, n2, h = cell
    ok = [s for s in samples if s is not None]
    failed = len(ok) < len(samples)
    resamples = sum(s.resamples for s in ok) + MAX_CONSECUTIVE_RESAMPLES * (len(samples) - len(ok))

    def mean(attr):
        return float(np.mean([getattr(s, attr) for s in ok])) if ok and not failed else math.nan

    return BenchmarkRecord(
        m1=m1, n1=n1, m2=m2, n2=n2,
        h_magnitude=h,
        ngap_pct=mean("ngap_pct"),
        dgap_pct=mean("dgap_pct"),
        t_extensive_s=mean("t_extensive_s"),
        t_decouple_s=mean("t_decouple_s"),
        t_benders_s=mean("t_benders_s"),
        runs=len(ok),
        seed_base=config.seed_base,
        resample_events=resamples,
        failed=failed,
        samples=ok,
    )


def run_benchmark(config: BenchConfig, progress=None) -> list[BenchmarkRecord]:
    """One averaged record per grid cell, in grid order.

    A cell whose draws keep violating the recourse assumptions is marked
    ``failed`` with NaN averages.  ``progress(record)`` is called after each
    finished cell.
    """
    threads = config.threads or os.cpu_count() or 1
    records = []
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for cell in config.cells():
            if config.warmup:
                run_once(config, cell, 0)
            tasks = [(config, cell, r) for r in range(config.runs)]
            samples = list(pool.map(_task, tasks)) if pool else [_task(t) for t in tasks]
            record = _aggregate(config, cell, samples)
            records.append(record)
            if progress is not None:
                progress(record)
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def records_to_csv(records: list[BenchmarkRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def records_from_csv(text: str) -> list[BenchmarkRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    out = []
    for row in reader:
        v = dict(zip(CSV_HEADER, row))
        ngap, dgap = float(v["Ngap"]), float(v["Dgap"])
        out.append(
            BenchmarkRecord(
                m1=int(v["m1"]), n1=int(v["n1"]), m2=int(v["m2"]), n2=int(v["n2"]),
                h_magnitude=float(v["h"]),
                ngap_pct=ngap, dgap_pct=dgap,
                t_extensive_s=float(v["t_e"]), t_decouple_s=float(v["t_d"]), t_benders_s=float(v["t_b"]),
                runs=int(v["runs"]), resample_events=int(v["resamples"]),
                failed=math.isnan(ngap),
            )
        )
    return out


def records_to_table(records: list[BenchmarkRecord]) -> str:
    """Aligned plain-text table in the column order of the CSV.

    Timing columns are wall-clock seconds and vary between executions.
    """
    rows = [CSV_HEADER]
    for r in records:
        if r.failed:
            gaps = ["FAILED", "FAILED"]
        else:
            gaps = [f"{r.ngap_pct:.2f}", f"{r.dgap_pct:.2f}"]
        rows.append(
            [str(r.m1), str(r.n1), str(r.m2), str(r.n2), f"{r.h_magnitude:g}", *gaps,
             f"{r.t_extensive_s:.3f}", f"{r.t_decouple_s:.3f}", f"{r.t_benders_s:.3f}",
             str(r.runs), str(r.resample_events)]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(CSV_HEADER))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"

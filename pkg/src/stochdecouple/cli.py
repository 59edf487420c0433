"""Command-line entry point: ``stochdecouple <command> [flags]``.

Exit codes: 0 on success, 1 on usage errors, 2 when a solve fails or an
instance violates the recourse assumptions.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace

from . import bench
from .baselines import run_naive, solve_extensive
from .decouple import DecouplingConfig, estimate_invariance_epsilon, run_decoupling
from .errors import (
    GridTooShort,
    InfeasibleError,
    NotConverged,
    ParseError,
    RecourseInfeasible,
    RecourseUnbounded,
    StochDecoupleError,
    UnboundedError,
    ValidationError,
)
from .lshaped import run_benders
from .model import GeneratorConfig, generate_gaussian_instance, load_instance, program_to_dict, save_instance

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # Registered on the root parser and on every subcommand.  The subcommand
    # copies default to SUPPRESS so they only override when actually given.
    def d(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    parser.add_argument("--delta", type=float, default=d(0.01), help="norm grid step (default 0.01)")
    parser.add_argument("--kmax", type=int, default=d(100), help="number of grid steps (default 100)")
    parser.add_argument("--gap-tol", type=float, default=d(0.02), help="Benders relative gap (default 0.02)")
    parser.add_argument("--threads", type=int, default=d(None), help="worker count (default: all CPUs)")
    parser.add_argument("--output", default=d(None), help="output file (default stdout)")
    parser.add_argument("--format", choices=("csv", "table"), default=d("table"), help="bench output format")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False), help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stochdecouple", description="Two-stage stochastic LP solvers and benchmark harness.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a Gaussian random instance as JSON")
    _global_flags(gen, suppress=True)
    gen.add_argument("--m1", type=int, required=True)
    gen.add_argument("--n1", type=int, required=True)
    gen.add_argument("--m2", type=int, required=True)
    gen.add_argument("--n2", type=int, required=True)
    gen.add_argument("--h", type=float, default=2.0, help="recourse right-hand side magnitude (default 2)")
    gen.add_argument("--scenarios", type=int, default=50)
    gen.add_argument("--first-stage-seed", type=int, default=None)
    gen.add_argument("--zero-technology", action="store_true", help="set every T to zero")

    solve = sub.add_parser("solve", help="solve an instance file with one method")
    _global_flags(solve, suppress=True)
    solve.add_argument("--method", choices=("extensive", "decouple", "benders", "naive"), required=True)
    solve.add_argument("--instance", required=True)

    probe = sub.add_parser("probe-invariance", help="estimate the rotation-invariance defect")
    _global_flags(probe, suppress=True)
    probe.add_argument("--instance", required=True)
    probe.add_argument("--rho", type=float, required=True)
    probe.add_argument("--probes", type=int, default=20)

    b = sub.add_parser("bench", help="run the benchmark grid")
    _global_flags(b, suppress=True)
    b.add_argument("--runs", type=int, default=50)
    b.add_argument("--scenarios", type=int, default=50)
    b.add_argument("--m1", type=int, default=100)
    b.add_argument("--m2", type=int, default=100)
    b.add_argument("--n-values", type=int, nargs="+", default=[5, 10, 15, 20])
    b.add_argument("--h-values", type=float, nargs="+", default=[2.0, 3.0, 4.0, 5.0])
    b.add_argument("--fixed-first-stage", action="store_true", help="share A, c, q across runs")
    b.add_argument("--no-warmup", action="store_true")
    return parser


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_generate(args) -> int:
    config = GeneratorConfig(
        args.m1, args.n1, args.m2, args.n2, args.h,
        num_scenarios=args.scenarios,
        seed=args.seed,
        first_stage_seed=args.first_stage_seed,
        zero_technology=args.zero_technology,
    )
    program = generate_gaussian_instance(config)
    if args.output is None:
        sys.stdout.write(json.dumps(program_to_dict(program)) + "\n")
    else:
        save_instance(program, args.output)
    return EXIT_OK


def _decouple(program, args):
    config = DecouplingConfig(delta=args.delta, k_max=args.kmax, workers=args.threads or 1)
    while True:
        try:
            return run_decoupling(program, config)
        except GridTooShort as exc:
            logging.getLogger(__name__).info("%s; doubling k_max", exc)
            config = replace(config, k_max=2 * config.k_max)


def _cmd_solve(args) -> int:
    program = load_instance(args.instance)
    t0 = time.perf_counter()
    info: dict = {"method": args.method}
    if args.method == "extensive":
        sol = solve_extensive(program)
        info["objective"] = sol.objective
        info["x"] = sol.x_star.tolist()
    elif args.method == "decouple":
        res = _decouple(program, args)
        info.update(objective=res.z_hat, best_k=res.best_k, tau=res.best_k * args.delta,
                    first_stage_norm=res.x_tilde_norm, k_max_effective=res.k_max_effective)
    elif args.method == "benders":
        try:
            res = run_benders(program, gap_tol=args.gap_tol)
        except NotConverged as exc:
            res = exc.result
            print(f"warning: Benders stopped after {res.iterations} iterations without reaching the gap", file=sys.stderr)
        ub, inc = res.gap_history[-1]
        info.update(objective=res.objective, iterations=res.iterations, upper_bound=ub,
                    converged=res.converged, x=res.x_best.tolist())
    else:
        info["objective"] = run_naive(program)
    info["seconds"] = time.perf_counter() - t0
    print(f"objective: {info['objective']!r}")
    for key, value in info.items():
        if key not in ("objective", "x"):
            print(f"{key}: {value}")
    return EXIT_OK


def _cmd_probe(args) -> int:
    program = load_instance(args.instance)
    est = estimate_invariance_epsilon(program, args.rho, args.probes, seed=args.seed)
    print(f"epsilon_hat: {est.epsilon_hat!r}")
    print(f"probes: {est.num_probes}")
    print(f"rho: {est.norm_tested}")
    print(f"expected_recourse_e1: {est.mean_recourse!r}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = bench.BenchConfig(
        n_values=tuple(args.n_values),
        h_values=tuple(args.h_values),
        m1=args.m1,
        m2=args.m2,
        runs=args.runs,
        num_scenarios=args.scenarios,
        delta=args.delta,
        k_max=args.kmax,
        gap_tol=args.gap_tol,
        seed_base=args.seed,
        fixed_first_stage=args.fixed_first_stage,
        threads=args.threads,
        warmup=not args.no_warmup,
    )

    def progress(record):
        logging.getLogger(__name__).info("cell n1=%d h=%g done", record.n1, record.h_magnitude)

    records = bench.run_benchmark(config, progress=progress)
    if args.format == "csv":
        text = bench.records_to_csv(records)
    else:
        text = bench.records_to_table(records) + "(t_e, t_d, t_b are wall-clock seconds and vary between executions)\n"
    _emit(text, args.output)
    return EXIT_FAILURE if any(r.failed for r in records) else EXIT_OK


def _diagnostic(exc: Exception) -> str:
    fields = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, (RecourseInfeasible, InfeasibleError)):
        fields["status"] = "Infeasible"
    elif isinstance(exc, (RecourseUnbounded, UnboundedError)):
        fields["status"] = "Unbounded"
    for attr in ("scenario", "k"):
        value = getattr(exc, attr, None)
        if value is not None:
            fields[attr] = value
    if isinstance(exc, ValidationError):
        fields["violations"] = exc.violations
    return json.dumps(fields)


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.delta <= 0 or args.kmax < 1 or (args.threads is not None and args.threads < 1):
        parser.print_help(sys.stderr)
        print("error: need --delta > 0, --kmax >= 1 and --threads >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    handlers = {"generate": _cmd_generate, "solve": _cmd_solve, "probe-invariance": _cmd_probe, "bench": _cmd_bench}
    try:
        return handlers[args.command](args)
    except (ParseError, FileNotFoundError, IsADirectoryError) as exc:
        print(_diagnostic(exc), file=sys.stderr)
        return EXIT_USAGE
    except (StochDecoupleError, ValueError) as exc:
        print(_diagnostic(exc), file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    sys.exit(cli_main())

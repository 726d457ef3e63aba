"""Command-line entry point.

Subcommands: solve (one problem), gen (write a problem grid), bench (run a
solver set over a grid), profile (performance profiles from records),
report (summary tables), selftest (invariant suites).

Exit codes: 0 success, 1 usage/config error, 2 I/O or data error,
3 selftest failure. Every run prints its resolved solver configuration and
base seed so results can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bench import (
    DEFAULT_BASE_SEED,
    PROFILE_METRICS,
    ProblemSpec,
    full_grid,
    generate_problem,
    make_grid,
    performance_profile,
    read_records,
    reduced_grid,
    relative_error,
    run_benchmark,
    summarize,
    write_profiles,
    write_records,
)
from .diagnostics import selftest
from .operators import KINDS, operator_norm_sq
from .plots import render_step_curves
from .solvers import NEEDS_NORM, NORM_SQ_INFLATION, SOLVERS, SolverConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_SELFTEST = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise UsageError(message)


def _default_jobs() -> int:
    env = os.environ.get("SPARSEGOLD_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _load_config(path: str | None) -> tuple[dict, dict]:
    """Split a JSON config file into solver settings and grid restrictions."""
    if path is None:
        return {}, {}
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed config file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError("config file must hold a JSON object")
    grid = raw.pop("grid", {})
    if not isinstance(grid, dict):
        raise UsageError("config key 'grid' must hold an object")
    return raw, grid


def _resolve_config(args) -> tuple[SolverConfig, dict]:
    solver_keys, grid_keys = _load_config(getattr(args, "config", None))
    try:
        cfg = SolverConfig.from_dict(solver_keys)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad solver config: {exc}") from exc
    return cfg, grid_keys


def _print_header(cfg: SolverConfig, seed: int) -> None:
    print(f"# config: {json.dumps(cfg.to_dict(), sort_keys=True)}")
    print(f"# base_seed: {seed}")


def _grid_for(args, grid_keys: dict, seed: int) -> list[ProblemSpec]:
    if args.grid == "full":
        return full_grid(seed)
    if args.grid == "reduced":
        return reduced_grid(seed)
    allowed = {"kinds", "ns", "deltas", "rhos", "noise_hs"}
    unknown = set(grid_keys) - allowed
    if unknown:
        raise UsageError(f"unknown grid config keys: {sorted(unknown)}")
    fields = {key: tuple(value) for key, value in grid_keys.items()}
    try:
        return make_grid(seed, **fields)
    except ValueError as exc:
        raise UsageError(f"bad grid restriction: {exc}") from exc


def _parse_solvers(text: str) -> list[str]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    if not names:
        raise UsageError("no solvers given")
    unknown = [name for name in names if name not in SOLVERS]
    if unknown:
        raise UsageError(
            f"unknown solvers {unknown}; registered: {', '.join(SOLVERS)}")
    return names


def _cmd_solve(args) -> int:
    cfg, _ = _resolve_config(args)
    _print_header(cfg, args.seed)
    try:
        spec = ProblemSpec(args.ensemble, args.n, args.delta, args.rho,
                           args.noise_h, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    problem = generate_problem(spec, mu=cfg.mu)
    solve = SOLVERS[args.solver]
    if args.solver in NEEDS_NORM:
        norm_sq = operator_norm_sq(problem.objective.op) * NORM_SQ_INFLATION
        result = solve(problem.objective, cfg=cfg, L=norm_sq, keep_trace=True)
    else:
        result = solve(problem.objective, cfg=cfg, keep_trace=True)
    rel = relative_error(result.x_final, problem.xs_true)
    print(f"problem  {spec.problem_id}  (m={spec.m}, k={spec.k_sparsity})")
    print(f"solver   {args.solver}")
    print(f"status   {result.status.value}")
    print(f"n_iter   {result.n_iter}")
    print(f"n_fun    {result.n_fun}")
    print(f"F_final  {result.f_final:.12g}")
    print(f"rel_err  {rel:.6g}")
    print(f"cpu_sec  {result.cpu_seconds:.4g}")
    if args.trace_plot:
        points = [(float(t.k), t.f_new) for t in result.trace] or [(0.0, result.f_final)]
        render_step_curves(
            [(args.solver, points)], args.trace_plot,
            title=f"objective vs iteration ({spec.problem_id})",
            xlabel="iteration", ylabel="F", step=False,
        )
        print(f"trace plot written to {args.trace_plot}")
    return EXIT_OK


def _cmd_gen(args) -> int:
    import csv

    cfg, grid_keys = _resolve_config(args)
    _print_header(cfg, args.seed)
    specs = _grid_for(args, grid_keys, args.seed)
    try:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["ensemble", "n", "m", "k", "delta", "rho", "noise_h", "seed"])
            for spec in specs:
                writer.writerow([spec.kind, spec.n, spec.m, spec.k_sparsity,
                                 spec.delta, spec.rho, spec.noise_h, spec.seed])
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from exc
    print(f"{len(specs)} problem specs written to {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg, grid_keys = _resolve_config(args)
    _print_header(cfg, args.seed)
    solvers = _parse_solvers(args.solvers)
    specs = _grid_for(args, grid_keys, args.seed)
    print(f"running {len(solvers)} solvers on {len(specs)} problems "
          f"with {args.jobs} workers")
    records = run_benchmark(specs, solvers, cfg, parallelism=args.jobs)
    try:
        write_records(records, args.out)
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from exc
    failures = sum(1 for r in records if r.status not in
                   ("Converged", "StationaryDirection"))
    print(f"{len(records)} records written to {args.out} ({failures} unsolved runs)")
    return EXIT_OK


def _read_records_checked(path):
    try:
        return read_records(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _cmd_profile(args) -> int:
    cfg, _ = _resolve_config(args)
    _print_header(cfg, args.seed)
    records = _read_records_checked(args.records)
    metrics = PROFILE_METRICS if args.metric == "all" else (args.metric,)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {out_dir}: {exc}") from exc
    curves_by_metric = {}
    try:
        for metric in metrics:
            curves_by_metric[metric] = performance_profile(records, metric)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    csv_path = out_dir / "profiles.csv"
    write_profiles(curves_by_metric, csv_path)
    print(f"profile data written to {csv_path}")
    for metric, curves in curves_by_metric.items():
        svg_path = out_dir / f"profile_{metric}.svg"
        render_step_curves(
            [(c.solver, list(c.points)) for c in curves], svg_path,
            title=f"performance profile: {metric}",
            xlabel="varsigma", ylabel="P(varsigma)", y_range=(0.0, 1.0),
        )
        print(f"profile plot written to {svg_path}")
    return EXIT_OK


def _cmd_report(args) -> int:
    import csv

    cfg, _ = _resolve_config(args)
    _print_header(cfg, args.seed)
    records = _read_records_checked(args.records)
    try:
        summaries = summarize(records)
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    header = (f"{'solver':<10}{'cpu_mean':>10}{'iter_mean':>11}{'fun_mean':>10}"
              f"{'cpu_sd':>10}{'iter_sd':>11}{'fun_sd':>10}")
    print("cost metrics (mean | standard deviation)")
    print(header)
    for s in summaries:
        print(f"{s.solver:<10}{s.cpu_mean:>10.3f}{s.iter_mean:>11.1f}{s.fun_mean:>10.1f}"
              f"{s.cpu_sd:>10.3f}{s.iter_sd:>11.1f}{s.fun_sd:>10.1f}")
    print()
    print("relative error (mean, sd, max, min)")
    print(f"{'solver':<10}{'mean':>10}{'sd':>10}{'max':>10}{'min':>10}")
    for s in summaries:
        print(f"{s.solver:<10}{s.relerr_mean:>10.4f}{s.relerr_sd:>10.4f}"
              f"{s.relerr_max:>10.4f}{s.relerr_min:>10.4f}")

    if args.out:
        try:
            with open(args.out, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow([
                    "solver", "count", "cpu_mean", "cpu_sd", "iter_mean",
                    "iter_sd", "fun_mean", "fun_sd", "relerr_mean",
                    "relerr_sd", "relerr_max", "relerr_min",
                ])
                for s in summaries:
                    writer.writerow([
                        s.solver, s.count, s.cpu_mean, s.cpu_sd, s.iter_mean,
                        s.iter_sd, s.fun_mean, s.fun_sd, s.relerr_mean,
                        s.relerr_sd, s.relerr_max, s.relerr_min,
                    ])
        except OSError as exc:
            raise DataError(f"cannot write {args.out}: {exc}") from exc
        print(f"\nsummary CSV written to {args.out}")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    cfg, _ = _resolve_config(args)
    _print_header(cfg, args.seed)
    try:
        groups = selftest(seed=args.seed, inject_fault=args.inject_fault)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    all_ok = True
    for group in groups:
        tag = "PASS" if group.passed else "FAIL"
        all_ok &= group.passed
        print(f"{tag}  {group.name}: {group.detail}")
    if not all_ok:
        print("selftest FAILED")
        return EXIT_SELFTEST
    print("selftest passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparsegold",
                     description="Sparse-recovery solvers and benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file mirroring the solver config "
                                        "(plus an optional 'grid' object)")
        p.add_argument("--seed", type=int, default=DEFAULT_BASE_SEED,
                       help="base seed (default %(default)s)")

    p_solve = sub.add_parser("solve", help="solve one generated problem")
    common(p_solve)
    p_solve.add_argument("--ensemble", choices=KINDS, default="gaussian")
    p_solve.add_argument("--n", type=int, default=1024)
    p_solve.add_argument("--delta", type=float, default=0.3)
    p_solve.add_argument("--rho", type=float, default=0.1)
    p_solve.add_argument("--noise-h", type=int, default=7, dest="noise_h")
    p_solve.add_argument("--solver", choices=tuple(SOLVERS), default="smisga")
    p_solve.add_argument("--trace-plot", dest="trace_plot",
                         help="write an SVG of F versus iteration")
    p_solve.set_defaults(func=_cmd_solve)

    p_gen = sub.add_parser("gen", help="write a problem-spec grid as CSV")
    common(p_gen)
    p_gen.add_argument("--grid", choices=("full", "reduced", "custom"),
                       default="reduced")
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_gen)

    p_bench = sub.add_parser("bench", help="run solvers over a problem grid")
    common(p_bench)
    p_bench.add_argument("--grid", choices=("full", "reduced", "custom"),
                         default="reduced")
    p_bench.add_argument("--solvers", default="smisga,isga",
                         help="comma-separated solver names (default %(default)s)")
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--jobs", type=int, default=_default_jobs(),
                         help="worker processes (default: SPARSEGOLD_JOBS or core count)")
    p_bench.set_defaults(func=_cmd_bench)

    p_profile = sub.add_parser("profile", help="performance profiles from records")
    common(p_profile)
    p_profile.add_argument("--records", required=True)
    p_profile.add_argument("--metric", choices=PROFILE_METRICS + ("all",),
                           default="all")
    p_profile.add_argument("--out-dir", dest="out_dir", default=".")
    p_profile.set_defaults(func=_cmd_profile)

    p_report = sub.add_parser("report", help="summary tables from records")
    common(p_report)
    p_report.add_argument("--records", required=True)
    p_report.add_argument("--out", help="also write the summary as CSV")
    p_report.set_defaults(func=_cmd_report)

    p_self = sub.add_parser("selftest", help="run the invariant suites")
    common(p_self)
    p_self.add_argument("--inject-fault", dest="inject_fault",
                        choices=("acceptance",), help=argparse.SUPPRESS)
    p_self.set_defaults(func=_cmd_selftest)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return code if isinstance(code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Randomized benchmark protocol: problem grid, execution, and aggregation.

Problems are drawn on a Cartesian grid of ensemble kind, signal length n,
measurement fraction delta, sparsity fraction rho and noise level 10^-h.
Every cell's seed is derived from the base seed and the cell coordinates, so
any subset of the grid regenerates identically in isolation.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .objective import CompositeObjective
from .operators import KINDS, EnsembleSpec, make_operator, operator_norm_sq
from .rng import make_generator, mix_seed
from .solvers import (
    NEEDS_NORM,
    NORM_SQ_INFLATION,
    SOLVERS,
    SolverConfig,
)

DEFAULT_BASE_SEED = 20260810

GRID_NS = tuple(2 ** e for e in range(10, 16))
GRID_DELTAS = (0.1, 0.2, 0.3)
GRID_RHOS = (0.1, 0.2, 0.3)
GRID_NOISE_H = (1, 3, 5, 7)

# Runs with these statuses count as unsolved in performance profiles.
FAILURE_STATUSES = frozenset({"LineSearchFailure", "MaxIterations"})

RECORD_COLUMNS = (
    "problem_id", "ensemble", "n", "m", "k", "delta", "rho", "noise_h",
    "seed", "solver", "status", "cpu_sec", "n_iter", "n_fun", "rel_err",
    "final_F",
)

PROFILE_COLUMNS = ("metric", "solver", "varsigma", "probability")
PROFILE_METRICS = ("cpu_sec", "n_iter", "n_fun")


def round_half_away_from_zero(x: float) -> int:
    """round(0.5) -> 1 style rounding, as opposed to banker's rounding."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass(frozen=True)
class ProblemSpec:
    """Grid coordinates of one randomized test problem."""

    kind: str
    n: int
    delta: float
    rho: float
    noise_h: int | float
    seed: int

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; choose from {KINDS}")
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 2, got {self.n}")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if self.m < 1:
            raise ValueError(f"delta*n rounds to {self.m}, need >= 1")
        if self.k_sparsity < 1:
            raise ValueError(f"rho*m rounds to {self.k_sparsity}, need >= 1")

    @property
    def m(self) -> int:
        return round_half_away_from_zero(self.delta * self.n)

    @property
    def k_sparsity(self) -> int:
        return round_half_away_from_zero(self.rho * self.m)

    @property
    def sigma(self) -> float:
        """Noise level 10^-h; an infinite h means noiseless."""
        if math.isinf(self.noise_h):
            return 0.0
        return 10.0 ** (-self.noise_h)

    @property
    def problem_id(self) -> str:
        return (f"{self.kind}-n{self.n}-d{self.delta:g}-r{self.rho:g}"
                f"-h{self.noise_h}-s{self.seed}")


@dataclass(frozen=True)
class GeneratedProblem:
    """A realized problem: the objective, the noisy reference signal, and
    the pre-noise sparse signal it was built from."""

    objective: CompositeObjective
    xs_true: np.ndarray
    spec: ProblemSpec
    sparse_signal: np.ndarray


def generate_problem(spec: ProblemSpec, mu: float = SolverConfig.mu) -> GeneratedProblem:
    """Realize a problem from its spec; deterministic in spec.seed.

    The sparse signal has exactly k standard-normal entries on a uniformly
    chosen support. Both the signal and the observation are contaminated
    with Gaussian noise of level sigma = 10^-h; the signal noise lands on
    the support so the reference keeps exactly k nonzero entries, and the
    observation is taken from the contaminated signal.
    """
    op = make_operator(EnsembleSpec(spec.kind, spec.m, spec.n, seed=mix_seed(spec.seed, 1)))
    rng_signal = make_generator(mix_seed(spec.seed, 2))
    support = rng_signal.choice(spec.n, size=spec.k_sparsity, replace=False)
    signal = np.zeros(spec.n)
    signal[support] = rng_signal.standard_normal(spec.k_sparsity)

    rng_noise = make_generator(mix_seed(spec.seed, 3))
    sigma = spec.sigma
    xs_true = signal.copy()
    xs_true[support] += sigma * rng_noise.standard_normal(spec.k_sparsity)
    b = op.apply(xs_true) + sigma * rng_noise.standard_normal(spec.m)
    return GeneratedProblem(CompositeObjective(op, b, mu), xs_true, spec, signal)


def make_grid(
    base_seed: int,
    kinds: tuple[str, ...] = KINDS,
    ns: tuple[int, ...] = GRID_NS,
    deltas: tuple[float, ...] = GRID_DELTAS,
    rhos: tuple[float, ...] = GRID_RHOS,
    noise_hs: tuple[int, ...] = GRID_NOISE_H,
) -> list[ProblemSpec]:
    """Cartesian product of the requested coordinates.

    Cell seeds depend only on (base_seed, coordinates), never on list
    position, so restricted grids reproduce the matching cells of the full
    grid exactly.
    """
    specs = []
    for kind in kinds:
        kind_index = KINDS.index(kind)
        for n in ns:
            for delta in deltas:
                for rho in rhos:
                    for h in noise_hs:
                        seed = mix_seed(
                            base_seed, kind_index, n,
                            round(delta * 1000), round(rho * 1000), h,
                        )
                        specs.append(ProblemSpec(kind, n, delta, rho, h, seed))
    return specs


def full_grid(base_seed: int = DEFAULT_BASE_SEED) -> list[ProblemSpec]:
    """The full 6*6*3*3*4 = 1296-problem grid."""
    return make_grid(base_seed)


def reduced_grid(base_seed: int = DEFAULT_BASE_SEED) -> list[ProblemSpec]:
    """Desk-scale restriction to n in {2^10, 2^11}: 432 problems."""
    return make_grid(base_seed, ns=(2 ** 10, 2 ** 11))


def relative_error(x: np.ndarray, xs_true: np.ndarray) -> float:
    """||x - xs_true|| / ||xs_true||; the reference must be nonzero."""
    ref = float(np.linalg.norm(xs_true))
    if ref == 0.0:
        raise ValueError("reference signal has zero norm")
    return float(np.linalg.norm(x - xs_true)) / ref


@dataclass(frozen=True)
class RunRecord:
    """One (problem, solver) outcome, flattened for CSV storage."""

    problem_id: str
    ensemble: str
    n: int
    m: int
    k: int
    delta: float
    rho: float
    noise_h: int | float
    seed: int
    solver: str
    status: str
    cpu_sec: float
    n_iter: int
    n_fun: int
    rel_err: float
    final_F: float


def _run_cell(args: tuple[int, ProblemSpec, tuple[str, ...], SolverConfig]) -> tuple[int, list[RunRecord]]:
    index, spec, solver_names, cfg = args
    problem = generate_problem(spec, mu=cfg.mu)
    obj = problem.objective
    norm_sq = None
    records = []
    for name in solver_names:
        solve = SOLVERS[name]
        if name in NEEDS_NORM:
            if norm_sq is None:
                norm_sq = operator_norm_sq(obj.op) * NORM_SQ_INFLATION
            result = solve(obj, cfg=cfg, L=norm_sq)
        else:
            result = solve(obj, cfg=cfg)
        records.append(RunRecord(
            problem_id=spec.problem_id, ensemble=spec.kind, n=spec.n,
            m=spec.m, k=spec.k_sparsity, delta=spec.delta, rho=spec.rho,
            noise_h=spec.noise_h, seed=spec.seed, solver=name,
            status=result.status.value, cpu_sec=result.cpu_seconds,
            n_iter=result.n_iter, n_fun=result.n_fun,
            rel_err=relative_error(result.x_final, problem.xs_true),
            final_F=result.f_final,
        ))
    return index, records


def run_benchmark(
    specs: list[ProblemSpec],
    solver_names: list[str] | tuple[str, ...],
    cfg: SolverConfig | None = None,
    parallelism: int = 1,
) -> list[RunRecord]:
    """Run every named solver on every problem; one record per pair.

    Records depend only on (spec, cfg), not on worker scheduling, and come
    back ordered by spec index then solver order. cpu_sec is the one field
    that varies between runs.
    """
    unknown = [s for s in solver_names if s not in SOLVERS]
    if unknown:
        raise ValueError(
            f"unknown solvers {unknown}; registered: {sorted(SOLVERS)}")
    cfg = cfg or SolverConfig()
    names = tuple(solver_names)
    tasks = [(i, spec, names, cfg) for i, spec in enumerate(specs)]
    if parallelism <= 1 or len(specs) <= 1:
        outputs = [_run_cell(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (parallelism * 4))
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            outputs = list(pool.map(_run_cell, tasks, chunksize=chunk))
    outputs.sort(key=lambda pair: pair[0])
    return [record for _, batch in outputs for record in batch]


@dataclass(frozen=True)
class SolverSummary:
    """Per-solver aggregates over a record set (population standard deviations)."""

    solver: str
    count: int
    cpu_mean: float
    cpu_sd: float
    iter_mean: float
    iter_sd: float
    fun_mean: float
    fun_sd: float
    relerr_mean: float
    relerr_sd: float
    relerr_max: float
    relerr_min: float


def _solver_order(names: set[str]) -> list[str]:
    ordered = [s for s in SOLVERS if s in names]
    ordered += sorted(names - set(ordered))
    return ordered


def summarize(records: list[RunRecord]) -> list[SolverSummary]:
    """Mean/sd of the cost metrics and mean/sd/max/min of the relative error,
    grouped by solver in registration order."""
    if not records:
        raise ValueError("cannot summarize an empty record set")
    by_solver: dict[str, list[RunRecord]] = {}
    for rec in records:
        by_solver.setdefault(rec.solver, []).append(rec)
    summaries = []
    for name in _solver_order(set(by_solver)):
        group = by_solver[name]
        cpu = np.array([r.cpu_sec for r in group])
        iters = np.array([r.n_iter for r in group], dtype=float)
        funs = np.array([r.n_fun for r in group], dtype=float)
        errs = np.array([r.rel_err for r in group])
        summaries.append(SolverSummary(
            solver=name, count=len(group),
            cpu_mean=float(cpu.mean()), cpu_sd=float(cpu.std()),
            iter_mean=float(iters.mean()), iter_sd=float(iters.std()),
            fun_mean=float(funs.mean()), fun_sd=float(funs.std()),
            relerr_mean=float(errs.mean()), relerr_sd=float(errs.std()),
            relerr_max=float(errs.max()), relerr_min=float(errs.min()),
        ))
    return summaries


@dataclass(frozen=True)
class ProfileCurve:
    """Step-function points (varsigma, fraction of problems within varsigma
    of the best solver) for one solver."""

    solver: str
    points: tuple[tuple[float, float], ...]


def performance_profile(records: list[RunRecord], metric: str) -> list[ProfileCurve]:
    """Cost ratios against the per-problem best solver, as cumulative curves.

    Failed runs (line-search failure or iteration cap) get an infinite
    ratio, so their curve saturates below 1. Every (problem, solver) pair
    must be present exactly once. If the best cost on a problem is zero,
    zero-cost runs get ratio 1 and the rest ratio infinity.
    """
    if metric not in PROFILE_METRICS:
        raise ValueError(f"metric must be one of {PROFILE_METRICS}, got {metric!r}")
    if not records:
        raise ValueError("cannot profile an empty record set")

    solvers = _solver_order({r.solver for r in records})
    table: dict[str, dict[str, RunRecord]] = {}
    for rec in records:
        row = table.setdefault(rec.problem_id, {})
        if rec.solver in row:
            raise ValueError(f"duplicate record for ({rec.problem_id}, {rec.solver})")
        row[rec.solver] = rec
    for pid, row in table.items():
        missing = [s for s in solvers if s not in row]
        if missing:
            raise ValueError(f"problem {pid} is missing solvers {missing}")

    n_p = len(table)
    ratios: dict[str, list[float]] = {s: [] for s in solvers}
    for row in table.values():
        costs = {}
        for s in solvers:
            rec = row[s]
            value = float(getattr(rec, metric))
            costs[s] = math.inf if rec.status in FAILURE_STATUSES else value
        best = min(costs.values())
        for s in solvers:
            if math.isinf(costs[s]):
                ratios[s].append(math.inf)
            elif best == 0.0:
                ratios[s].append(1.0 if costs[s] == 0.0 else math.inf)
            else:
                ratios[s].append(costs[s] / best)

    finite = sorted({r for rs in ratios.values() for r in rs if math.isfinite(r)})
    if not finite:
        finite = [1.0]
    curves = []
    for s in solvers:
        arr = np.array(ratios[s])
        points = tuple(
            (v, float(np.count_nonzero(arr <= v)) / n_p) for v in finite
        )
        curves.append(ProfileCurve(s, points))
    return curves


def _format_field(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_records(records: list[RunRecord], path) -> None:
    """CSV with the fixed column order; floats carry 17 significant digits."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for rec in records:
            writer.writerow([_format_field(getattr(rec, col)) for col in RECORD_COLUMNS])


def _parse_noise_h(text: str) -> int | float:
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_records(path) -> list[RunRecord]:
    """Inverse of `write_records`; schema problems name the column and line."""
    import csv

    types = {f.name: f.type for f in fields(RunRecord)}
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError("line 1: empty file, expected header")
        if tuple(header) != RECORD_COLUMNS:
            missing = [c for c in RECORD_COLUMNS if c not in header]
            extra = [c for c in header if c not in RECORD_COLUMNS]
            raise ValueError(
                f"line 1: header mismatch (missing {missing}, unexpected {extra})")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RECORD_COLUMNS):
                raise ValueError(
                    f"line {line_no}: expected {len(RECORD_COLUMNS)} fields, got {len(row)}")
            values = {}
            for col, text in zip(RECORD_COLUMNS, row):
                try:
                    if col == "noise_h":
                        values[col] = _parse_noise_h(text)
                    elif types[col] == "int":
                        values[col] = int(text)
                    elif types[col] == "float":
                        values[col] = float(text)
                    else:
                        values[col] = text
                except ValueError as exc:
                    raise ValueError(f"line {line_no}: bad value for {col}: {text!r}") from exc
            records.append(RunRecord(**values))
    return records


def write_profiles(curves_by_metric: dict[str, list[ProfileCurve]], path) -> None:
    """Flat CSV of profile curves: metric, solver, varsigma, probability."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PROFILE_COLUMNS)
        for metric, curves in curves_by_metric.items():
            for curve in curves:
                for varsigma, prob in curve.points:
                    writer.writerow([
                        metric, curve.solver,
                        _format_field(float(varsigma)), _format_field(float(prob)),
                    ])

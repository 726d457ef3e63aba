"""Solver loops: Goldstein line-search iterations plus fixed-step baselines.

`smisga_solve` runs the semi-monotone acceptance rule, `isga_solve` the
monotone one; both share a single loop so that forcing the relaxed reference
down to the current objective value reproduces the monotone iterates bit for
bit. `ista_solve` and `fista_solve` are fixed-step proximal-gradient
baselines used for cross-checks and benchmark comparison.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, fields, asdict

import numpy as np

from .linesearch import NonmonotoneState, search_alpha
from .objective import CompositeObjective, EvalCounter, descent_measure, direction
from .operators import operator_norm_sq

# Floor for the relative stopping test so a zero objective still terminates.
F_FLOOR = 1e-30

# Safety margin applied to the power-iteration estimate of ||A||^2 before it
# is used as a step-size denominator.
NORM_SQ_INFLATION = 1.01


class SolveStatus(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    LINE_SEARCH_FAILURE = "LineSearchFailure"
    STATIONARY_DIRECTION = "StationaryDirection"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class SolverConfig:
    """All tunable constants shared by the solvers."""

    mu: float = 2.0 ** -8
    theta: float = 1e-10
    tau_min: float = 1e-4
    tau_max: float = 1e4
    eta_min: float = 0.0
    eta_max: float = 1.0
    window_N: int = 10
    ftol: float = 1e-10
    max_iter: int = 10000
    backtrack_factor: float = 0.5
    max_backtracks: int = 5
    dtol: float = 1e-12
    theta1: float = 0.15
    theta2: float = 0.9
    allow_expansion: bool = False

    def __post_init__(self) -> None:
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if not 0 < self.tau_min <= self.tau_max:
            raise ValueError(f"need 0 < tau_min <= tau_max, got [{self.tau_min}, {self.tau_max}]")
        if not 0 <= self.eta_min <= self.eta_max <= 1:
            raise ValueError(f"need 0 <= eta_min <= eta_max <= 1, got [{self.eta_min}, {self.eta_max}]")
        if self.window_N < 1:
            raise ValueError("window_N must be >= 1")
        if self.ftol <= 0:
            raise ValueError("ftol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be >= 1")
        if self.dtol < 0:
            raise ValueError("dtol must be nonnegative")
        if not 0 < self.theta1 < self.theta2 < 1:
            raise ValueError(f"need 0 < theta1 < theta2 < 1, got ({self.theta1}, {self.theta2})")

    @classmethod
    def from_dict(cls, values: dict) -> "SolverConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(slots=True)
class TraceRecord:
    """Scalars recorded at one accepted iteration."""

    k: int
    f_prev: float
    f_new: float
    norm_d: float
    alpha: float
    tau: float
    nu: float
    lam: float
    eta: float
    r_ref: float
    f_window_max: float
    delta: float
    backtracks: int
    degraded: bool
    bracket_ok: bool


@dataclass
class SolveResult:
    x_final: np.ndarray
    status: SolveStatus
    n_iter: int
    n_fun: int
    n_grad: int
    cpu_seconds: float
    f_final: float
    trace: list[TraceRecord] | None = None
    iterates: list[np.ndarray] | None = None


def stopping_check(f_prev: float, f_next: float, cfg: SolverConfig) -> bool:
    """Relative objective-change test |F_next - F_prev| <= ftol*max(|F_prev|, floor)."""
    return abs(f_next - f_prev) <= cfg.ftol * max(abs(f_prev), F_FLOOR)


def bb_tau(s: np.ndarray, y: np.ndarray, tau_prev: float, cfg: SolverConfig) -> float:
    """Spectral step s.s/s.y clamped to [tau_min, tau_max].

    Nonpositive curvature s.y falls back to the previous value before
    clamping.
    """
    sy = float(s @ y)
    raw = float(s @ s) / sy if sy > 0 else tau_prev
    return min(max(raw, cfg.tau_min), cfg.tau_max)


def _prepare_x0(obj: CompositeObjective, x0: np.ndarray | None) -> np.ndarray:
    if x0 is None:
        return np.zeros(obj.n)
    x0 = np.array(x0, dtype=float)
    if x0.shape != (obj.n,):
        raise ValueError(f"x0 must have shape ({obj.n},), got {x0.shape}")
    return x0


def _goldstein_solve(
    obj: CompositeObjective,
    x0: np.ndarray | None,
    cfg: SolverConfig,
    monotone: bool,
    keep_trace: bool,
    keep_iterates: bool,
) -> SolveResult:
    start = time.perf_counter()
    counter = EvalCounter()
    x = _prepare_x0(obj, x0)
    f_total, _, residual = obj.evaluate(x, counter)
    grad = obj.grad_f(residual, counter)
    state = NonmonotoneState(cfg.window_N, eta0=0.5, eta_min=cfg.eta_min, eta_max=cfg.eta_max)
    state.push(f_total)

    tau = min(max(1.0, cfg.tau_min), cfg.tau_max)
    s = y = None
    trace: list[TraceRecord] | None = [] if keep_trace else None
    iterates: list[np.ndarray] | None = [x.copy()] if keep_iterates else None
    status = SolveStatus.MAX_ITERATIONS
    n_iter = 0

    for k in range(cfg.max_iter):
        if k > 0:
            tau = bb_tau(s, y, tau, cfg)
        d = direction(obj, x, grad, tau)
        norm_d = float(np.linalg.norm(d))
        if norm_d <= cfg.dtol:
            status = SolveStatus.STATIONARY_DIRECTION
            break
        delta = descent_measure(obj, x, d, grad)
        f_window_max = state.window_max()
        eta = state.eta
        r_ref = f_total if monotone else state.reference_value(f_total)
        op_d = obj.op.apply(d)
        outcome = search_alpha(
            obj, x, d, delta, r_ref, f_total, cfg, counter,
            residual=residual, op_d=op_d,
        )
        if not outcome.accepted:
            status = SolveStatus.LINE_SEARCH_FAILURE
            break

        x_new, residual_new, f_new = outcome.x_next, outcome.residual_next, outcome.f_next
        grad_new = obj.grad_f(residual_new, counter)
        s = x_new - x
        y = grad_new - grad
        state.push(f_new)
        state.update_eta(float(np.linalg.norm(grad_new)))
        n_iter += 1

        if keep_trace:
            step = outcome.alpha * delta
            bracket_ok = (f_total + cfg.theta2 * step <= f_new <= r_ref + cfg.theta1 * step)
            trace.append(TraceRecord(
                k=k, f_prev=f_total, f_new=f_new, norm_d=norm_d,
                alpha=outcome.alpha, tau=tau, nu=outcome.nu, lam=outcome.lam,
                eta=eta, r_ref=r_ref, f_window_max=f_window_max, delta=delta,
                backtracks=outcome.backtracks, degraded=outcome.degraded,
                bracket_ok=bracket_ok,
            ))
        if keep_iterates:
            iterates.append(x_new.copy())

        stop = stopping_check(f_total, f_new, cfg)
        x, f_total, residual, grad = x_new, f_new, residual_new, grad_new
        if stop:
            status = SolveStatus.CONVERGED
            break

    return SolveResult(
        x_final=x, status=status, n_iter=n_iter,
        n_fun=counter.n_fun, n_grad=counter.n_grad,
        cpu_seconds=time.perf_counter() - start, f_final=f_total,
        trace=trace, iterates=iterates,
    )


def smisga_solve(
    obj: CompositeObjective,
    x0: np.ndarray | None = None,
    cfg: SolverConfig | None = None,
    keep_trace: bool = False,
    keep_iterates: bool = False,
) -> SolveResult:
    """Semi-monotone Goldstein solve: acceptance tests nu*|1-lambda| >= theta
    against the relaxed window reference."""
    return _goldstein_solve(obj, x0, cfg or SolverConfig(), monotone=False,
                            keep_trace=keep_trace, keep_iterates=keep_iterates)


def isga_solve(
    obj: CompositeObjective,
    x0: np.ndarray | None = None,
    cfg: SolverConfig | None = None,
    keep_trace: bool = False,
    keep_iterates: bool = False,
) -> SolveResult:
    """Monotone Goldstein solve: the reference is pinned to the current
    objective value, so acceptance tests nu*|nu-1| >= theta."""
    return _goldstein_solve(obj, x0, cfg or SolverConfig(), monotone=True,
                            keep_trace=keep_trace, keep_iterates=keep_iterates)


def _baseline_trace_record(k, f_prev, f_new, norm_step, step) -> TraceRecord:
    nan = float("nan")
    return TraceRecord(
        k=k, f_prev=f_prev, f_new=f_new, norm_d=norm_step, alpha=step,
        tau=nan, nu=nan, lam=nan, eta=nan, r_ref=nan, f_window_max=nan,
        delta=nan, backtracks=0, degraded=False, bracket_ok=False,
    )


def ista_solve(
    obj: CompositeObjective,
    x0: np.ndarray | None = None,
    cfg: SolverConfig | None = None,
    L: float | None = None,
    keep_trace: bool = False,
) -> SolveResult:
    """Fixed-step proximal gradient with step 1/L, L an upper bound on ||A||^2.

    When `L` is not supplied it is estimated by power iteration and inflated
    by 1% so the step stays on the safe side. The objective is nonincreasing
    every iteration, which makes this the high-precision reference solver.
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    counter = EvalCounter()
    if L is None:
        L = operator_norm_sq(obj.op) * NORM_SQ_INFLATION
    step = 1.0 / L
    x = _prepare_x0(obj, x0)
    f_total, _, residual = obj.evaluate(x, counter)
    trace: list[TraceRecord] | None = [] if keep_trace else None
    status = SolveStatus.MAX_ITERATIONS
    n_iter = 0

    for k in range(cfg.max_iter):
        grad = obj.grad_f(residual, counter)
        x_new = obj.reg.prox(x - step * grad, obj.mu * step)
        f_new, _, residual_new = obj.evaluate(x_new, counter)
        n_iter += 1
        if keep_trace:
            trace.append(_baseline_trace_record(
                k, f_total, f_new, float(np.linalg.norm(x_new - x)), step))
        stop = stopping_check(f_total, f_new, cfg)
        x, f_total, residual = x_new, f_new, residual_new
        if stop:
            status = SolveStatus.CONVERGED
            break

    return SolveResult(
        x_final=x, status=status, n_iter=n_iter,
        n_fun=counter.n_fun, n_grad=counter.n_grad,
        cpu_seconds=time.perf_counter() - start, f_final=f_total, trace=trace,
    )


def fista_solve(
    obj: CompositeObjective,
    x0: np.ndarray | None = None,
    cfg: SolverConfig | None = None,
    L: float | None = None,
    keep_trace: bool = False,
) -> SolveResult:
    """Accelerated proximal gradient with step 1/L and momentum
    t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2."""
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    counter = EvalCounter()
    if L is None:
        L = operator_norm_sq(obj.op) * NORM_SQ_INFLATION
    step = 1.0 / L
    x = _prepare_x0(obj, x0)
    f_total, _, residual_x = obj.evaluate(x, counter)
    residual_y = residual_x
    y = x
    t = 1.0
    trace: list[TraceRecord] | None = [] if keep_trace else None
    status = SolveStatus.MAX_ITERATIONS
    n_iter = 0

    for k in range(cfg.max_iter):
        grad_y = obj.grad_f(residual_y, counter)
        x_new = obj.reg.prox(y - step * grad_y, obj.mu * step)
        f_new, _, residual_new = obj.evaluate(x_new, counter)
        n_iter += 1
        if keep_trace:
            trace.append(_baseline_trace_record(
                k, f_total, f_new, float(np.linalg.norm(x_new - x)), step))
        stop = stopping_check(f_total, f_new, cfg)

        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        momentum = (t - 1.0) / t_new
        y = x_new + momentum * (x_new - x)
        # A is linear, so the residual at y combines the iterate residuals.
        residual_y = residual_new + momentum * (residual_new - residual_x)

        x, f_total, residual_x, t = x_new, f_new, residual_new, t_new
        if stop:
            status = SolveStatus.CONVERGED
            break

    return SolveResult(
        x_final=x, status=status, n_iter=n_iter,
        n_fun=counter.n_fun, n_grad=counter.n_grad,
        cpu_seconds=time.perf_counter() - start, f_final=f_total, trace=trace,
    )


# Registration order fixes reporting order in benchmark summaries.
SOLVERS = {
    "smisga": smisga_solve,
    "isga": isga_solve,
    "ista": ista_solve,
    "fista": fista_solve,
}

# Solvers whose step size needs an operator-norm estimate.
NEEDS_NORM = frozenset({"ista", "fista"})

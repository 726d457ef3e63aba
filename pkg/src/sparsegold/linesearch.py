"""Goldstein-quotient step acceptance, monotone and semi-monotone.

The semi-monotone rule measures the trial decrease against a relaxed
reference R_k built from a sliding window of recent objective values, which
lets full steps pass far from the optimum while still forcing a strict
decrease at every accepted step.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import isfinite

import numpy as np

from .objective import CompositeObjective, EvalCounter

# Gradient-norm threshold switching the relaxation weight between its
# "near optimum" decay and its "far from optimum" hold at 0.5.
SMALL_GRADIENT = 1e-2


class NonmonotoneState:
    """Sliding window of accepted objective values plus relaxation weight.

    The window keeps at most `capacity` values; the reference value is the
    convex combination eta*max(window) + (1-eta)*F_current. Owned by a
    single solve; not thread-safe.
    """

    def __init__(
        self,
        capacity: int,
        eta0: float = 0.5,
        eta_min: float = 0.0,
        eta_max: float = 1.0,
    ) -> None:
        if capacity < 1:
            raise ValueError(f"window capacity must be >= 1, got {capacity}")
        if not 0.0 <= eta_min <= eta_max <= 1.0:
            raise ValueError(f"need 0 <= eta_min <= eta_max <= 1, got [{eta_min}, {eta_max}]")
        self.capacity = capacity
        self.eta_min = eta_min
        self.eta_max = eta_max
        self.eta = min(max(eta0, eta_min), eta_max)
        self.window: deque[float] = deque(maxlen=capacity)

    def push(self, f_accepted: float) -> "NonmonotoneState":
        """Record an accepted objective value, evicting the oldest at capacity."""
        if not isfinite(f_accepted):
            raise ValueError(f"window values must be finite, got {f_accepted}")
        self.window.append(float(f_accepted))
        return self

    def window_max(self) -> float:
        if not self.window:
            raise ValueError("window is empty")
        return max(self.window)

    def reference_value(self, f_current: float) -> float:
        """R = eta*window_max + (1-eta)*F_current; never below F_current."""
        return self.eta * self.window_max() + (1.0 - self.eta) * f_current

    def update_eta(self, grad_norm: float) -> "NonmonotoneState":
        """Decay eta toward 0.03 near the optimum, hold it at 0.5 away from it."""
        if grad_norm <= SMALL_GRADIENT:
            eta = (2.0 / 3.0) * self.eta + 0.01
        else:
            eta = max(0.99 * self.eta, 0.5)
        self.eta = min(max(eta, self.eta_min), self.eta_max)
        return self


def goldstein_quotients(
    f_current: float, f_next: float, r_ref: float, alpha: float, delta: float
) -> tuple[float, float]:
    """Actual-vs-predicted decrease quotients (nu, lambda).

    nu = (F_next - F_current) / (alpha*delta) and lambda replaces F_current
    with the relaxed reference; lambda >= nu because r_ref >= F_current and
    alpha*delta < 0.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if delta >= 0:
        raise ValueError(f"delta must be negative (descent direction), got {delta}")
    denom = alpha * delta
    return (f_next - f_current) / denom, (f_next - r_ref) / denom


def semi_monotone_accept(nu: float, lam: float, theta: float) -> bool:
    """Accept when nu*|1 - lambda| >= theta; implies nu > 0, a strict decrease."""
    return nu * abs(1.0 - lam) >= theta


def monotone_accept(nu: float, theta: float) -> bool:
    """Accept when nu*|nu - 1| >= theta (keeps nu away from both 0 and 1)."""
    return nu * abs(nu - 1.0) >= theta


@dataclass
class LineSearchOutcome:
    """Result of one step-size search along a fixed direction."""

    alpha: float
    f_next: float
    nu: float
    lam: float
    backtracks: int
    accepted: bool
    degraded: bool = False
    x_next: np.ndarray | None = None
    residual_next: np.ndarray | None = None


def search_alpha(
    obj: CompositeObjective,
    x: np.ndarray,
    d: np.ndarray,
    delta: float,
    r_ref: float,
    f_current: float,
    cfg,
    counter: EvalCounter | None = None,
    residual: np.ndarray | None = None,
    op_d: np.ndarray | None = None,
) -> LineSearchOutcome:
    """Goldstein-bracket step search along d, starting from alpha=1.

    A trial is accepted when it clears both the sufficient-decrease side of
    the relaxed bracket (lambda >= theta1; with the monotone reference
    r_ref = f_current this is nu >= theta1) and the formal product condition
    nu*|1-lambda| >= theta. Trials failing that are backtracked by
    cfg.backtrack_factor. When alpha=1 passes but leaves most of the
    predicted decrease on the table (nu > theta2, the kept lower bracket
    bound), the step is expanded while the acceptance tests keep passing,
    which is what lets the relaxed reference produce genuinely larger steps
    than the monotone rule.

    Each trial costs one objective evaluation. Residuals along the ray are
    combined linearly from `residual` (at x) and `op_d` (A applied to d), so
    one forward application covers the whole search; both are computed here
    if not supplied.

    When all `cfg.max_backtracks` trials are rejected, the search is
    exhausted. If the best trial's decrease is at the stopping rule's scale
    (|F_best - F| <= ftol*max(|F|, floor)), that trial is returned with the
    `degraded` flag so the solver can take it and terminate through the
    regular stopping test; any other exhaustion returns `accepted=False`,
    which the solver reports as a line-search failure. Exhaustion mid-run is
    how hopeless problems get abandoned quickly instead of creeping.
    """
    if not np.any(d):
        raise ValueError("line search requires a nonzero direction")
    if delta >= 0:
        raise ValueError(f"delta must be negative, got {delta}")
    if residual is None:
        residual = obj.op.apply(x) - obj.b
    if op_d is None:
        op_d = obj.op.apply(d)

    def trial(alpha: float, backtracks: int) -> LineSearchOutcome | None:
        x_trial = x + alpha * d
        r_trial = residual + alpha * op_d
        f_trial = obj.value_with_residual(x_trial, r_trial, counter)
        if not isfinite(f_trial):
            return None
        nu, lam = goldstein_quotients(f_current, f_trial, r_ref, alpha, delta)
        return LineSearchOutcome(alpha, f_trial, nu, lam, backtracks=backtracks,
                                 accepted=True, x_next=x_trial, residual_next=r_trial)

    def passes(out: LineSearchOutcome) -> bool:
        return out.lam >= cfg.theta1 and semi_monotone_accept(out.nu, out.lam, cfg.theta)

    beta = cfg.backtrack_factor
    trials_left = cfg.max_backtracks
    best: LineSearchOutcome | None = None

    current = trial(1.0, backtracks=0)
    if current is not None and not passes(current):
        best = current
        current = None

    if current is None:
        # Backtracking phase: first smaller alpha that clears both gates.
        alpha, k = 1.0, 0
        while trials_left > 0:
            alpha *= beta
            k += 1
            trials_left -= 1
            out = trial(alpha, backtracks=k)
            if out is None:
                continue
            if passes(out):
                return out
            if best is None or out.f_next < best.f_next:
                best = out
        stop_scale = cfg.ftol * max(abs(f_current), 1e-30)
        if (best is not None and best.f_next < f_current
                and f_current - best.f_next <= stop_scale):
            best.degraded = True
            return best
        return LineSearchOutcome(
            alpha=alpha, f_next=np.inf, nu=np.nan, lam=np.nan,
            backtracks=cfg.max_backtracks + 1, accepted=False,
        )

    # Expansion phase: alpha=1 passed but took under (1-theta2) of the
    # predicted decrease, so larger steps are still inside the bracket.
    if cfg.allow_expansion:
        while current.nu > cfg.theta2 and trials_left > 0:
            trials_left -= 1
            out = trial(current.alpha / beta, backtracks=0)
            if out is None or not passes(out):
                break
            current = out
    return current

"""Composite objective F(x) = 0.5*||Ax - b||^2 + mu*c(x).

The regularizer c is pluggable (value + proximal map); the l1 norm is the
shipped instance, whose prox is the soft-threshold `shrinkage` map. The
proximal-gradient direction and its predicted-descent measure live here too.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import LinearOperator


def shrinkage(x: np.ndarray, theta: float) -> np.ndarray:
    """Soft threshold: sign(x_i) * max(|x_i| - theta, 0), coordinatewise.

    This is the proximal map of theta*||.||_1.
    """
    if theta < 0:
        raise ValueError(f"threshold must be nonnegative, got {theta}")
    return np.sign(x) * np.maximum(np.abs(x) - theta, 0.0)


class Regularizer:
    """Convex penalty with a value and a proximal map.

    prox(x, theta) must return the minimizer of theta*value(y) + 0.5*||x-y||^2.
    """

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def prox(self, x: np.ndarray, theta: float) -> np.ndarray:
        raise NotImplementedError


class L1(Regularizer):
    """The l1 norm; its prox is the shrinkage operator."""

    def value(self, x: np.ndarray) -> float:
        return float(np.abs(x).sum())

    def prox(self, x: np.ndarray, theta: float) -> np.ndarray:
        return shrinkage(x, theta)


@dataclass
class EvalCounter:
    """Per-solve evaluation counters; never shared between solves."""

    n_fun: int = 0
    n_grad: int = 0


@dataclass(frozen=True)
class CompositeObjective:
    """F = 0.5*||Ax - b||^2 + mu*c(x) over a fixed operator and observation."""

    op: LinearOperator
    b: np.ndarray
    mu: float
    reg: Regularizer = field(default_factory=L1)

    def __post_init__(self) -> None:
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        b = np.asarray(self.b, dtype=float)
        if b.shape != (self.op.rows,):
            raise ValueError(
                f"observation length {b.shape} does not match operator rows ({self.op.rows},)"
            )
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.op.cols

    def evaluate(
        self, x: np.ndarray, counter: EvalCounter | None = None
    ) -> tuple[float, float, np.ndarray]:
        """Return (F, f, residual) at x; counts one objective evaluation."""
        residual = self.op.apply(x) - self.b
        f = 0.5 * float(residual @ residual)
        total = f + self.mu * self.reg.value(x)
        if counter is not None:
            counter.n_fun += 1
        return total, f, residual

    def value_with_residual(
        self, x: np.ndarray, residual: np.ndarray, counter: EvalCounter | None = None
    ) -> float:
        """F at x given its residual Ax - b (line-search fast path).

        Counts one objective evaluation, same as `evaluate`.
        """
        f = 0.5 * float(residual @ residual)
        if counter is not None:
            counter.n_fun += 1
        return f + self.mu * self.reg.value(x)

    def grad_f(self, residual: np.ndarray, counter: EvalCounter | None = None) -> np.ndarray:
        """Gradient of the smooth part, A^T(Ax - b), from a residual."""
        if counter is not None:
            counter.n_grad += 1
        return self.op.apply_adjoint(residual)


def direction(
    obj: CompositeObjective, x: np.ndarray, gradient: np.ndarray, tau: float
) -> np.ndarray:
    """Proximal-gradient direction prox(x - tau*grad, mu*tau) - x."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return obj.reg.prox(x - tau * gradient, obj.mu * tau) - x


def descent_measure(
    obj: CompositeObjective, x: np.ndarray, d: np.ndarray, gradient: np.ndarray
) -> float:
    """Predicted descent d.grad + mu*(c(x+d) - c(x)).

    Nonpositive for the proximal-gradient direction; zero exactly at
    stationary points.
    """
    return float(d @ gradient) + obj.mu * (obj.reg.value(x + d) - obj.reg.value(x))

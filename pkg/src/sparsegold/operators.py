"""Measurement operators for sparse-recovery experiments.

Six randomized ensembles are supported. Gaussian, scaled Gaussian,
orthogonalized Gaussian and Bernoulli operators are held as dense arrays;
partial Hadamard and partial DCT operators are held implicitly as a row
subset of a fast orthogonal transform. Every ensemble is scaled to have an
O(1) operator norm (N(0,1/m) entries, +-1/sqrt(m) entries, orthonormal rows,
or unit spectral norm), the convention under which the solvers' safeguard
bounds are meaningful. All construction randomness comes from the seed
carried by :class:`EnsembleSpec`, so equal specs produce bit-identical
operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .rng import make_generator, mix_seed

KINDS = (
    "gaussian",
    "scaled_gaussian",
    "orthogonalized_gaussian",
    "bernoulli",
    "partial_hadamard",
    "partial_dct",
)

_IMPLICIT_KINDS = ("partial_hadamard", "partial_dct")


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class EnsembleSpec:
    """Recipe for one measurement operator: kind, shape and seed."""

    kind: str
    m: int
    n: int
    seed: int

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; choose from {KINDS}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.m > self.n:
            raise ValueError(f"m must not exceed n, got m={self.m}, n={self.n}")
        if self.kind in _IMPLICIT_KINDS and not _is_power_of_two(self.n):
            raise ValueError(f"{self.kind} requires n to be a power of two, got n={self.n}")


@dataclass(frozen=True)
class LinearOperator:
    """An m-by-n real operator with forward and adjoint application.

    Either `dense` holds the full matrix, or (`row_indices`, `scale`)
    describe a row subset of an n-by-n fast transform. Instances are
    immutable and safe to share between concurrent solves.
    """

    kind: str
    rows: int
    cols: int
    dense: np.ndarray | None = field(default=None, repr=False)
    row_indices: np.ndarray | None = field(default=None, repr=False)
    scale: float = 1.0

    @classmethod
    def from_dense(cls, matrix: np.ndarray, kind: str = "dense") -> "LinearOperator":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("dense operator requires a 2-D array")
        m, n = matrix.shape
        return cls(kind=kind, rows=m, cols=n, dense=matrix)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Forward map, length-n input to length-m output."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.cols,):
            raise ValueError(f"expected input of shape ({self.cols},), got {x.shape}")
        if self.dense is not None:
            return self.dense @ x
        if self.kind == "partial_hadamard":
            return self.scale * fwht(x)[self.row_indices]
        return self.scale * scipy.fft.dct(x, type=2, norm="ortho")[self.row_indices]

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        """Adjoint map, length-m input to length-n output."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.rows,):
            raise ValueError(f"expected input of shape ({self.rows},), got {y.shape}")
        if self.dense is not None:
            return self.dense.T @ y
        padded = np.zeros(self.cols)
        padded[self.row_indices] = y
        if self.kind == "partial_hadamard":
            # Sylvester Hadamard matrices are symmetric.
            return self.scale * fwht(padded)
        return self.scale * scipy.fft.idct(padded, type=2, norm="ortho")

    def materialize(self) -> np.ndarray:
        """Dense m-by-n array equal to this operator.

        Implicit kinds are rebuilt from the explicit transform formulas
        (not from `apply`), so comparing against `apply` exercises two
        independent computational routes. Quadratic cost; intended for
        verification at small n.
        """
        if self.dense is not None:
            return self.dense.copy()
        if self.kind == "partial_hadamard":
            full = hadamard_matrix(self.cols).astype(float)
        else:
            full = dct2_matrix(self.cols)
        return self.scale * full[self.row_indices, :]


def fwht(x: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform in Sylvester ordering.

    O(n log n); the input length must be a power of two.
    """
    n = x.size
    if not _is_power_of_two(n):
        raise ValueError(f"fwht requires a power-of-two length, got {n}")
    out = np.asarray(x, dtype=float).copy()
    h = 1
    while h < n:
        blocks = out.reshape(-1, 2, h)
        top = blocks[:, 0, :] + blocks[:, 1, :]
        bottom = blocks[:, 0, :] - blocks[:, 1, :]
        out = np.concatenate((top[:, None, :], bottom[:, None, :]), axis=1).reshape(-1)
        h *= 2
    return out


def hadamard_matrix(n: int) -> np.ndarray:
    """Sylvester (natural-order) Hadamard matrix of order n, entries +-1."""
    if not _is_power_of_two(n):
        raise ValueError(f"Hadamard order must be a power of two, got {n}")
    h = np.array([[1]], dtype=np.int64)
    block = np.array([[1, 1], [1, -1]], dtype=np.int64)
    while h.shape[0] < n:
        h = np.kron(h, block)
    return h


def dct2_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix of order n, built from the cosine formula."""
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * j + 1) * k / (2 * n))
    mat *= np.sqrt(2.0 / n)
    mat[0, :] = np.sqrt(1.0 / n)
    return mat


def _estimate_spectral_norm(matrix: np.ndarray, seed: int) -> float:
    op = LinearOperator.from_dense(matrix)
    return float(np.sqrt(operator_norm_sq(op, max_iters=500, tol=1e-12, seed=seed)))


def make_operator(spec: EnsembleSpec) -> LinearOperator:
    """Build the operator described by `spec`; deterministic in the seed."""
    rng = make_generator(spec.seed)
    m, n = spec.m, spec.n

    if spec.kind == "gaussian":
        # Entries N(0, 1/m), the usual compressed-sensing normalization; it
        # keeps the operator scale O(1) across the whole benchmark grid.
        dense = rng.standard_normal((m, n)) / np.sqrt(m)
        return LinearOperator(spec.kind, m, n, dense=dense)

    if spec.kind == "scaled_gaussian":
        raw = rng.standard_normal((m, n))
        norm = _estimate_spectral_norm(raw, seed=mix_seed(spec.seed, 0x5CA1E))
        return LinearOperator(spec.kind, m, n, dense=raw / norm)

    if spec.kind == "orthogonalized_gaussian":
        raw = rng.standard_normal((m, n))
        # QR of the transpose orthonormalizes the rows.
        q, _ = np.linalg.qr(raw.T)
        return LinearOperator(spec.kind, m, n, dense=np.ascontiguousarray(q.T))

    if spec.kind == "bernoulli":
        # Equiprobable +-1/sqrt(m), matching the gaussian scale.
        signs = rng.integers(0, 2, size=(m, n)).astype(float) * 2.0 - 1.0
        return LinearOperator(spec.kind, m, n, dense=signs / np.sqrt(m))

    # partial_hadamard / partial_dct: m distinct rows, uniform without replacement
    rows = np.sort(rng.choice(n, size=m, replace=False))
    scale = 1.0 / np.sqrt(n) if spec.kind == "partial_hadamard" else 1.0
    return LinearOperator(spec.kind, m, n, row_indices=rows, scale=scale)


def operator_norm_sq(
    op: LinearOperator,
    max_iters: int = 500,
    tol: float = 1e-10,
    seed: int = 0x9E3779B9,
) -> float:
    """Largest eigenvalue of A^T A by power iteration.

    Stops when the eigenvalue estimate changes by less than `tol` relatively,
    or after `max_iters` rounds. A zero operator returns 0.0.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    v = make_generator(seed).standard_normal(op.cols)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    lam = 0.0
    for _ in range(max_iters):
        w = op.apply_adjoint(op.apply(v))
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-30):
            return lam_new
        lam = lam_new
    return lam

"""Domain types, masked-matrix algebra and the shared merit function.

Observed entries are always held in canonical order: column-major, i.e.
sorted by column index first and row index second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class DimensionError(ValueError):
    """Shapes or indices do not agree."""


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Support:
    """Index set of observed entries of an ``m x n`` matrix."""

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray

    @classmethod
    def from_pairs(cls, m, n, rows, cols):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if m <= 0 or n <= 0:
            raise DimensionError(f"matrix shape must be positive, got {m}x{n}")
        if rows.shape != cols.shape:
            raise DimensionError("rows and cols must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
            raise DimensionError(f"index out of bounds for a {m}x{n} matrix")
        lin = cols * m + rows
        order = np.argsort(lin, kind="stable")
        lin = lin[order]
        if lin.size > 1 and np.any(lin[1:] == lin[:-1]):
            k = int(np.flatnonzero(lin[1:] == lin[:-1])[0])
            raise ValueError(f"duplicate entry ({lin[k] % m}, {lin[k] // m})")
        return cls(int(m), int(n), _frozen(rows[order], np.int64), _frozen(cols[order], np.int64))

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        cols, rows = np.nonzero(mask.T)
        return cls.from_pairs(mask.shape[0], mask.shape[1], rows, cols)

    @property
    def shape(self):
        return (self.m, self.n)

    @property
    def size(self):
        return int(self.rows.size)

    def mask(self):
        out = np.zeros(self.shape, dtype=bool)
        out[self.rows, self.cols] = True
        return out


def project_observed(M, support: Support) -> np.ndarray:
    """P_Omega: entries of ``M`` on the support, in canonical order."""
    M = np.asarray(M, dtype=float)
    if M.shape != support.shape:
        raise DimensionError(f"matrix is {M.shape}, support expects {support.shape}")
    return M[support.rows, support.cols]


def embed_observed(v, support: Support) -> np.ndarray:
    """Adjoint of :func:`project_observed`; zero off the support."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != support.size:
        raise DimensionError(f"vector has {v.size} entries, support has {support.size}")
    out = np.zeros(support.shape)
    out[support.rows, support.cols] = v
    return out


@dataclass(frozen=True, eq=False)
class ObservedMatrix:
    """Partially observed measurement matrix.

    ``values[k]`` is the measurement at ``(support.rows[k], support.cols[k])``.
    ``eps`` is the weight of the Tikhonov term on unobserved entries.
    """

    support: Support
    values: np.ndarray
    eps: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.values.shape != (self.support.size,):
            raise DimensionError("values must have one entry per observed index")

    @classmethod
    def from_entries(cls, m, n, rows, cols, values, eps=1e-10):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if values.shape != rows.shape:
            raise DimensionError("values must match the number of indices")
        support = Support.from_pairs(m, n, rows, cols)
        order = np.argsort(cols * m + rows, kind="stable")
        return cls(support, _frozen(values[order]), float(eps))

    @classmethod
    def from_dense(cls, M, mask, eps=1e-10):
        M = np.asarray(M, dtype=float)
        support = Support.from_mask(mask)
        if M.shape != support.shape:
            raise DimensionError("mask and matrix shapes differ")
        return cls(support, _frozen(project_observed(M, support)), float(eps))

    @property
    def m(self):
        return self.support.m

    @property
    def n(self):
        return self.support.n

    @property
    def shape(self):
        return self.support.shape

    def dense(self):
        """W-hat with zeros off the support."""
        return embed_observed(self.values, self.support)

    def mask(self):
        return self.support.mask()

    def weights(self):
        """H: 1 on the support, sqrt(eps) elsewhere."""
        H = np.full(self.shape, math.sqrt(self.eps))
        H[self.support.rows, self.support.cols] = 1.0
        return H

    def with_values(self, values):
        return replace(self, values=_frozen(values))

    def transpose(self) -> "ObservedMatrix":
        s = self.support
        return ObservedMatrix.from_entries(s.n, s.m, s.cols, s.rows, self.values, self.eps)


@dataclass(frozen=True, eq=False)
class SparseCorruption:
    """Corruption matrix E, stored by its values on the observed support.

    Entries off the support do not exist in this representation.
    """

    support: Support
    values: np.ndarray
    n0: int
    k_e: float

    def __post_init__(self):
        if self.values.shape != (self.support.size,):
            raise DimensionError("corruption values must cover the support")
        if self.k_e <= 0:
            raise ValueError("k_e must be positive")
        nnz = int(np.count_nonzero(self.values))
        if nnz > self.n0:
            raise ValueError(f"corruption has {nnz} nonzeros, bound is {self.n0}")
        norm = float(np.linalg.norm(self.values))
        if norm > self.k_e + 1e-12 * max(1.0, self.k_e):
            raise ValueError(f"corruption norm {norm} exceeds k_e={self.k_e}")

    @classmethod
    def zeros(cls, support, n0, k_e):
        return cls(support, _frozen(np.zeros(support.size)), int(n0), float(k_e))

    @classmethod
    def from_values(cls, support, values, n0, k_e):
        return cls(support, _frozen(values), int(n0), float(k_e))

    def dense(self):
        return embed_observed(self.values, self.support)

    @property
    def nnz(self):
        return int(np.count_nonzero(self.values))

    def norm(self):
        return float(np.linalg.norm(self.values))


def default_k_e(obs: ObservedMatrix, n0: int) -> float:
    """Norm bound on E that is large enough to stay inactive."""
    med = float(np.median(np.abs(obs.values))) if obs.support.size else 0.0
    k_e = 20.0 * math.sqrt(max(n0, 1)) * med
    return k_e if k_e > 0 else 1.0


@dataclass
class SolverConfig:
    """Scalars of the alternating solver.

    Fields left as ``None`` depend on the problem and are filled by
    :meth:`resolve`.
    """

    rank: int
    n0: int | None = None
    k_e: float | None = None
    eps: float = 1e-10
    beta1: float | None = None
    beta2: float | None = None
    lm_lambda_init: float = 1e-6
    lm_rho: float = 10.0
    outer_tol: float = 1e-6
    outer_max_iter: int = 300
    lm_max_iter: int = 100
    lm_tol: float = 1e-10
    eta_init: float | None = None
    eta_floor: float | None = None
    eta_shrink: float = 0.8
    huber_reweight_iters: int = 3
    use_huber: bool = True
    trim_budget: int = 5000
    check_monotone: bool = True
    rng_seed: int = 0

    def resolve(self, obs: ObservedMatrix) -> "SolverConfig":
        if self.rank < 1 or self.rank > min(obs.shape):
            raise ValueError(f"rank {self.rank} invalid for a {obs.m}x{obs.n} matrix")
        if self.lm_rho <= 1:
            raise ValueError("lm_rho must exceed 1")
        beta = 1e-3 / math.sqrt(max(obs.shape))
        n0 = self.n0 if self.n0 is not None else math.ceil(0.15 * obs.support.size)
        n0 = min(int(n0), obs.support.size)
        k_e = self.k_e if self.k_e is not None else default_k_e(obs, n0)
        return replace(
            self,
            n0=n0,
            k_e=float(k_e),
            beta1=beta if self.beta1 is None else self.beta1,
            beta2=beta if self.beta2 is None else self.beta2,
        )


@dataclass
class IterationState:
    W: np.ndarray
    E: SparseCorruption
    N: np.ndarray
    merit: float
    iter: int = 0
    pure: bool = True


def merit_f(W, E, obs: ObservedMatrix) -> float:
    """0.5 * ||H o (W + E - W_hat)||^2 with E given as dense or SparseCorruption."""
    W = np.asarray(W, dtype=float)
    if W.shape != obs.shape:
        raise DimensionError(f"W is {W.shape}, observations are {obs.shape}")
    Ed = E.dense() if isinstance(E, SparseCorruption) else np.asarray(E, dtype=float)
    if Ed.shape != obs.shape:
        raise DimensionError("E has the wrong shape")
    R = obs.weights() * (W + Ed - obs.dense())
    return 0.5 * float(np.vdot(R, R))


def orthonormalize(X):
    """QR-based orthonormal basis with a nonnegative R diagonal."""
    Q, R = np.linalg.qr(np.asarray(X, dtype=float))
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s

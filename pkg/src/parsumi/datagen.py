"""Synthetic low-rank + sparse problems and recovery metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ObservedMatrix, Support, project_observed


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    """Problem generator settings.

    ``corruption_fraction`` is a fraction of the *observed* entries.
    ``decay_exponent`` > 1 replaces the singular values by 1/alpha^i
    (i = 1..r), rescaled to keep the Frobenius norm.
    """

    m: int
    n: int
    r: int
    missing_fraction: float = 0.0
    corruption_fraction: float = 0.0
    corruption_range: tuple = (-5.0, 5.0)
    noise_sigma: float = 0.0
    decay_exponent: float = 0.0
    seed: int = 0
    eps: float = 1e-10

    @property
    def observed_count(self):
        return int(round((1.0 - self.missing_fraction) * self.m * self.n))

    @property
    def corrupted_count(self):
        return int(round(self.corruption_fraction * self.observed_count))

    def validate(self):
        if min(self.m, self.n, self.r) < 1 or self.r > min(self.m, self.n):
            raise ParameterError(f"bad shape/rank {self.m}x{self.n} r={self.r}")
        if not 0.0 <= self.missing_fraction < 1.0:
            raise ParameterError("missing_fraction must lie in [0, 1)")
        if not 0.0 <= self.corruption_fraction < 1.0:
            raise ParameterError("corruption_fraction must lie in [0, 1)")
        if self.noise_sigma < 0 or self.decay_exponent < 0:
            raise ParameterError("noise_sigma and decay_exponent must be nonnegative")
        lo, hi = self.corruption_range
        if lo > hi:
            raise ParameterError("corruption_range must be (lo, hi) with lo <= hi")
        if self.observed_count < 1:
            raise ParameterError("no observed entries")


@dataclass(frozen=True, eq=False)
class Instance:
    obs: ObservedMatrix
    W_true: np.ndarray
    E_true: np.ndarray
    spec: SyntheticSpec


def generate(spec: SyntheticSpec) -> Instance:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    m, n, r = spec.m, spec.n, spec.r
    U = rng.uniform(-1.0, 1.0, (m, r))
    V = rng.uniform(-1.0, 1.0, (n, r))
    W = U @ V.T
    if spec.decay_exponent > 1.0:
        Uw, s, Vt = np.linalg.svd(W, full_matrices=False)
        s_new = spec.decay_exponent ** -np.arange(1, r + 1, dtype=float)
        s_new *= np.linalg.norm(s) / np.linalg.norm(s_new)
        W = (Uw[:, :r] * s_new) @ Vt[:r]

    p = spec.observed_count
    lin = np.sort(rng.choice(m * n, size=p, replace=False))
    support = Support.from_pairs(m, n, lin % m, lin // m)

    e = spec.corrupted_count
    lo, hi = spec.corruption_range
    where = rng.choice(p, size=e, replace=False)
    corr = np.zeros(p)
    corr[where] = rng.uniform(lo, hi, e)
    noise = rng.normal(0.0, spec.noise_sigma, p) if spec.noise_sigma > 0 else np.zeros(p)

    values = project_observed(W, support) + corr + noise
    obs = ObservedMatrix.from_entries(m, n, support.rows, support.cols, values, spec.eps)
    E_true = np.zeros((m, n))
    E_true[support.rows, support.cols] = corr
    return Instance(obs, W, E_true, spec)


def rmse(W_rec, W_true) -> float:
    W_rec = np.asarray(W_rec, dtype=float)
    W_true = np.asarray(W_true, dtype=float)
    if W_rec.shape != W_true.shape:
        raise ValueError("shape mismatch")
    return float(np.linalg.norm(W_rec - W_true) / math.sqrt(W_rec.size))


def rmse_visible(W_rec, obs: ObservedMatrix) -> float:
    if obs.support.size == 0:
        raise ValueError("RMSE over an empty support is undefined")
    d = project_observed(W_rec, obs.support) - obs.values
    return float(np.linalg.norm(d) / math.sqrt(d.size))


def oracle_rmse(m, n, r, observed_count, corrupted_count, sigma) -> float:
    """Noise floor sigma * sqrt((m + n - r) r / (p - e))."""
    if observed_count <= corrupted_count:
        raise ParameterError("observed_count must exceed corrupted_count")
    dof = (m + n - r) * r
    if dof <= 0:
        raise ParameterError("(m + n - r) r must be positive")
    return sigma * math.sqrt(dof / (observed_count - corrupted_count))


def support_f_measure(E_rec, E_true, tol=1e-9) -> float:
    a = np.abs(np.asarray(E_rec)) > tol
    b = np.abs(np.asarray(E_true)) > tol
    if not a.any() and not b.any():
        return 1.0
    tp = int(np.sum(a & b))
    if tp == 0:
        return 0.0
    precision = tp / int(a.sum())
    recall = tp / int(b.sum())
    return 2 * precision * recall / (precision + recall)

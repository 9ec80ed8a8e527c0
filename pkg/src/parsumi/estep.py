"""Closed-form corruption update under cardinality and norm bounds."""

from __future__ import annotations

import itertools

import numpy as np

from .core import ObservedMatrix, SparseCorruption, project_observed


def estep_target(obs: ObservedMatrix, W_next, E_k: SparseCorruption, beta2: float) -> np.ndarray:
    """b = P_Omega(W_hat - W_next + beta2 E_k) / (1 + beta2)."""
    if beta2 <= 0:
        raise ValueError("beta2 must be positive")
    return (obs.values - project_observed(W_next, obs.support) + beta2 * E_k.values) / (1.0 + beta2)


def solve_sparse_step(b, n0: int, k_e: float) -> np.ndarray:
    """argmin ||x - b|| subject to ||x||_0 <= n0 and ||x|| <= k_e.

    Keeps the n0 largest |b_i| (ties go to the lower index) and rescales
    onto the ball if their norm exceeds k_e.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    n0 = min(int(n0), b.size)
    if n0 <= 0:
        return x
    # stable sort on -|b| keeps lower indices first among ties
    keep = np.argsort(-np.abs(b), kind="stable")[:n0]
    bI = b[keep]
    nrm = float(np.linalg.norm(bI))
    x[keep] = bI * (k_e / nrm) if nrm > k_e else bI
    return x


def brute_force_sparse_step(b, n0: int, k_e: float):
    """Enumerate every support of size <= n0; returns (x, objective)."""
    b = np.asarray(b, dtype=float)
    best, best_x = np.inf, np.zeros_like(b)
    for s in range(min(n0, b.size) + 1):
        for I in itertools.combinations(range(b.size), s):
            x = np.zeros_like(b)
            I = list(I)
            bI = b[I]
            nrm = np.linalg.norm(bI)
            x[I] = bI * (k_e / nrm) if nrm > k_e else bI
            val = float(np.sum((x - b) ** 2))
            if val < best:
                best, best_x = val, x
    return best_x, best


def estep_objective(obs: ObservedMatrix, W_next, E, E_k: SparseCorruption, beta2: float) -> float:
    """0.5 ||H o (W_next - W_hat + E)||^2 + beta2/2 ||E - E_k||^2, E on the support."""
    Ev = E.values if isinstance(E, SparseCorruption) else np.asarray(E, dtype=float)
    R = obs.weights() * (np.asarray(W_next) - obs.dense())
    R[obs.support.rows, obs.support.cols] += Ev
    return 0.5 * float(np.vdot(R, R)) + 0.5 * beta2 * float(np.sum((Ev - E_k.values) ** 2))


def update_corruption(obs: ObservedMatrix, W_next, E_k: SparseCorruption, beta2: float,
                      gate: float = 0.0) -> SparseCorruption:
    """E_{k+1} = P*_Omega(x). Entries below ``gate`` in magnitude are dropped."""
    b = estep_target(obs, W_next, E_k, beta2)
    x = solve_sparse_step(b, E_k.n0, E_k.k_e)
    if gate > 0:
        x[np.abs(x) < gate] = 0.0
    return SparseCorruption.from_values(obs.support, x, E_k.n0, E_k.k_e)

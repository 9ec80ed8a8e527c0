"""Separable quadratic majorizer of the W-subproblem and its global minimizer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .wstep import WStepWorkspace


@dataclass(frozen=True, eq=False)
class MajorizationWeights:
    p: np.ndarray
    q: np.ndarray
    inflation: float = 1e-6


def compute_weights(Hbar, inflation=1e-6) -> MajorizationWeights:
    """Row/column maxima of Hbar; p is inflated so p_i q_j > Hbar_ij^2 strictly."""
    Hbar = np.asarray(Hbar, dtype=float)
    if np.any(Hbar <= 0):
        raise ValueError("Hbar must be strictly positive")
    p = (1.0 + inflation) * Hbar.max(axis=1)
    q = Hbar.max(axis=0)
    return MajorizationWeights(p, q, inflation)


def truncated_svd_rank_r(M, r: int) -> np.ndarray:
    """Best rank-r approximation (first r triplets of a full SVD)."""
    M = np.asarray(M, dtype=float)
    if r > min(M.shape):
        raise ValueError(f"rank {r} exceeds min{M.shape}")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return (U[:, :r] * s[:r]) @ Vt[:r]


def gradient(W, ws: WStepWorkspace):
    """Gradient of F(., Bhat) = 0.5 ||Hbar o (W - Bhat)||^2."""
    return ws.Hbar * (ws.Hbar * W - ws.Bk)


def majorizer_value(W, W_k, ws: WStepWorkspace, wts: MajorizationWeights) -> float:
    """F(W_k) + <G, W - W_k> + 0.5 <W - W_k, P (W - W_k) Q>."""
    D = np.asarray(W, dtype=float) - W_k
    G = gradient(W_k, ws)
    return ws.F(W_k) + float(np.vdot(G, D)) + 0.5 * float(np.sum(wts.p[:, None] * wts.q[None, :] * D * D))


def majorized_minimizer(W_k, ws: WStepWorkspace, wts: MajorizationWeights, r: int) -> np.ndarray:
    W_k = np.asarray(W_k, dtype=float)
    G = gradient(W_k, ws)
    sp = np.sqrt(wts.p)[:, None]
    sq = np.sqrt(wts.q)[None, :]
    U = sp * W_k * sq - G / (sp * sq)
    return truncated_svd_rank_r(U, r) / (sp * sq)

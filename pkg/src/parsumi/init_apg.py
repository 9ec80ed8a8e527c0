"""Convex initialization: nuclear norm + l1 relaxation solved by APG.

Minimizes  f(W, E) + lam ||W||_* + gamma ||E||_1  with E supported on the
observed set, using the unit-Lipschitz majorization of f (all H_ij <= 1)
and FISTA momentum.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .core import ObservedMatrix, SparseCorruption, default_k_e, project_observed
from .estep import solve_sparse_step

log = logging.getLogger(__name__)


@dataclass
class ApgConfig:
    nuclear_weight: float = 1.0
    l1_weight: float | None = None
    max_iter: int = 2000
    tol: float = 1e-6
    continuation_factor: float = 0.5
    continuation_max_passes: int = 8
    spectral_gap_target: float = 1e-2

    def resolve(self, obs: ObservedMatrix) -> "ApgConfig":
        gamma = self.l1_weight if self.l1_weight is not None else 1.0 / math.sqrt(max(obs.shape))
        if min(self.nuclear_weight, gamma, self.max_iter, self.tol) <= 0:
            raise ValueError("APG weights, tolerance and iteration cap must be positive")
        if not 0.0 < self.continuation_factor < 1.0:
            raise ValueError("continuation_factor must lie in (0, 1)")
        return replace(self, l1_weight=gamma)


@dataclass
class ApgResult:
    W: np.ndarray
    E: np.ndarray
    objective: float
    iterations: int
    converged: bool
    best_trace: list


def _svt(M, tau):
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    k = int(np.count_nonzero(s))
    return (U[:, :k] * s[:k]) @ Vt[:k], s


def svt(M, tau: float) -> np.ndarray:
    """Prox of tau * nuclear norm: shrink singular values by tau."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    M = np.asarray(M, dtype=float)
    if tau == 0:
        return M.copy()
    return _svt(M, tau)[0]


def soft_threshold(v, tau: float):
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def convex_objective(W, E, obs: ObservedMatrix, lam: float, gamma: float, nuc=None) -> float:
    R = obs.weights() * (W + E - obs.dense())
    if nuc is None:
        nuc = float(np.sum(np.linalg.svd(W, compute_uv=False)))
    return 0.5 * float(np.vdot(R, R)) + lam * nuc + gamma * float(np.sum(np.abs(E)))


def apg_solve(obs: ObservedMatrix, cfg: ApgConfig, W0=None, E0=None) -> ApgResult:
    """Accelerated proximal gradient; starts from (0, 0) unless warm-started."""
    cfg = cfg.resolve(obs)
    lam, gamma = cfg.nuclear_weight, cfg.l1_weight
    H2 = obs.weights() ** 2
    What = obs.dense()
    mask = obs.mask()
    W = np.zeros(obs.shape) if W0 is None else np.array(W0, dtype=float)
    E = np.zeros(obs.shape) if E0 is None else np.where(mask, E0, 0.0)
    Wb, Eb = W.copy(), E.copy()
    t = 1.0
    best = convex_objective(W, E, obs, lam, gamma)
    best_W, best_E = W, E
    trace = [best]
    converged = False
    k = 0
    for k in range(1, cfg.max_iter + 1):
        G = H2 * (Wb + Eb - What)
        W_new, sv = _svt(Wb - G / 2, lam / 2)
        E_new = np.where(mask, soft_threshold(Eb - G / 2, gamma / 2), 0.0)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_new
        Wb = W_new + mom * (W_new - W)
        Eb = E_new + mom * (E_new - E)
        change = math.hypot(np.linalg.norm(W_new - W), np.linalg.norm(E_new - E))
        scale = max(math.hypot(np.linalg.norm(W), np.linalg.norm(E)), 1.0)
        W, E, t = W_new, E_new, t_new
        obj = convex_objective(W, E, obs, lam, gamma, nuc=float(sv.sum()))
        if obj < best:
            best, best_W, best_E = obj, W, E
        trace.append(best)
        if change < cfg.tol * scale:
            converged = True
            break
    return ApgResult(best_W, best_E, best, k, converged, trace)


@dataclass
class ContinuationResult:
    W0: np.ndarray
    E0: SparseCorruption
    N0: np.ndarray
    W_convex: np.ndarray
    E_convex: np.ndarray
    nuclear_weight: float
    passes: int
    converged: bool
    iterations: int = 0


def _spectrum_checks(W, r, target):
    """(first r singular values all significant, the (r+1)-th negligible), relative to the first."""
    s = np.linalg.svd(W, compute_uv=False)
    if s[0] == 0:
        return False, True
    head = s[min(r, s.size) - 1] >= target * s[0]
    tail = r >= s.size or s[r] < target * s[0]
    return bool(head), bool(tail)


def continuation_init(obs: ObservedMatrix, r: int, cfg: ApgConfig | None = None,
                      n0: int | None = None, k_e: float | None = None) -> ContinuationResult:
    """Run APG with a geometrically decreasing nuclear weight.

    Starting from a weight that over-shrinks W, each pass lowers it until the
    solution shows r significant singular values with a negligible tail
    beyond them. A pass that lets the tail grow past the target is discarded
    in favour of the previous one.
    """
    cfg = (cfg or ApgConfig()).resolve(obs)
    n0 = math.ceil(0.15 * obs.support.size) if n0 is None else int(n0)
    k_e = default_k_e(obs, n0) if k_e is None else float(k_e)
    lam = cfg.nuclear_weight
    chosen = previous = None
    W = E = None
    passes = 0
    for passes in range(1, cfg.continuation_max_passes + 1):
        res = apg_solve(obs, replace(cfg, nuclear_weight=lam), W, E)
        W, E = res.W, res.E
        head, tail = _spectrum_checks(res.W, r, cfg.spectral_gap_target)
        log.debug("continuation pass %d lam=%g head=%s tail=%s", passes, lam, head, tail)
        if head and tail:
            chosen = (res, lam)
            break
        if not tail:
            chosen = previous or (res, lam)
            break
        previous = (res, lam)
        lam *= cfg.continuation_factor
    if chosen is None:
        chosen = previous
    res, lam = chosen
    if not res.converged:
        warnings.warn(f"APG did not converge in {cfg.max_iter} iterations", RuntimeWarning, stacklevel=2)

    U, s, Vt = np.linalg.svd(res.W, full_matrices=False)
    W0 = (U[:, :r] * s[:r]) @ Vt[:r]
    ev = project_observed(res.E, obs.support)
    E0 = SparseCorruption.from_values(obs.support, solve_sparse_step(ev, n0, k_e), n0, k_e)
    return ContinuationResult(W0, E0, U[:, :r].copy(), res.W, res.E, lam, passes, res.converged, res.iterations)

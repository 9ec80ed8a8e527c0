"""Robust refit against a fixed subspace, reweighting, and the eta schedule.

For fixed orthonormal N, each column solves

    min_{c, e}  0.5 ||h o (N c - w + e)||^2 + eta0 * sum_i k_i |e_i|

with e supported on the observed rows. Eliminating c leaves an l1-penalized
least-squares problem in e whose gradient step of length one is
``w - N c(e)``; FISTA on that reduced problem is what ``huber_regression``
runs, for all columns at once.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import ObservedMatrix


@dataclass
class HuberConfig:
    eta0: float
    eta_shrink: float = 0.8
    l_max: int = 3
    reweight_floor: float = 1e-4
    reweight_spread: float = 3.0
    inner_apg_iters: int = 200
    tol: float = 1e-9

    def __post_init__(self):
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")
        if not 0.0 < self.eta_shrink < 1.0:
            raise ValueError("eta_shrink must lie in (0, 1)")
        if self.l_max < 1:
            raise ValueError("l_max must be at least 1")


@dataclass
class HuberResult:
    C: np.ndarray
    E: np.ndarray
    objective: float
    iterations: int
    converged: bool


def huber_value(z, knee):
    """z^2/2 inside [-knee, knee], knee*|z| - knee^2/2 outside."""
    z = np.asarray(z, dtype=float)
    knee = np.asarray(knee, dtype=float)
    if np.any(knee <= 0):
        raise ValueError("knee must be positive")
    a = np.abs(z)
    return np.where(a <= knee, 0.5 * z * z, knee * a - 0.5 * knee * knee)


def huber_objective(N, C, E, obs: ObservedMatrix, eta0, knee_scale=None):
    """0.5 ||H o (N C - W_hat + E)||^2 + eta0 * sum k_ij |E_ij|."""
    H = obs.weights()
    R = H * (N @ C - obs.dense() + E)
    k = 1.0 if knee_scale is None else knee_scale
    return 0.5 * float(np.vdot(R, R)) + eta0 * float(np.sum(k * np.abs(E)))


def _coefficient_maps(N, H2):
    """Per-column least-squares maps K_j with c_j = K_j target_j, shape (n, r, m)."""
    NH = N.T[None, :, :] * H2.T[:, None, :]
    return np.linalg.solve(NH @ N, NH)


def _fit_coefficients(N, H2, target):
    """Weighted least squares per column: argmin_c ||h o (N c - target)||."""
    return np.einsum("jrm,mj->rj", _coefficient_maps(N, H2), target)


def huber_regression(N, obs: ObservedMatrix, cfg: HuberConfig, knee_scale=None) -> HuberResult:
    """Jointly fit C and a soft-thresholded E against the fixed basis N.

    ``knee_scale`` multiplies eta0 entrywise (used by reweighting).
    """
    N = np.asarray(N, dtype=float)
    H2 = obs.weights() ** 2
    What = obs.dense()
    mask = obs.mask()
    thr = cfg.eta0 * (np.ones(obs.shape) if knee_scale is None else np.asarray(knee_scale, dtype=float))
    K = _coefficient_maps(N, H2)

    def fit(E):
        return np.einsum("jrm,mj->rj", K, What - E)

    def shrink(E):
        res = What - N @ fit(E)
        return np.where(mask, np.sign(res) * np.maximum(np.abs(res) - thr, 0.0), 0.0)

    E = np.zeros(obs.shape)
    C = fit(E)
    best = huber_objective(N, C, E, obs, cfg.eta0, knee_scale)
    best_C, best_E = C, E
    Eb = E
    t = 1.0
    converged = False
    it = 0
    for it in range(1, cfg.inner_apg_iters + 1):
        E_new = shrink(Eb)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        Eb = E_new + ((t - 1.0) / t_new) * (E_new - E)
        change = float(np.linalg.norm(E_new - E))
        E, t = E_new, t_new
        C = fit(E)
        obj = huber_objective(N, C, E, obs, cfg.eta0, knee_scale)
        if obj < best:
            best, best_C, best_E = obj, C, E
        if change <= cfg.tol * max(1.0, float(np.linalg.norm(E))):
            converged = True
            break
    return HuberResult(best_C, best_E, best, it, converged)


def reweighted_huber(N, obs: ObservedMatrix, cfg: HuberConfig) -> HuberResult:
    """Repeat the robust fit with knees inversely proportional to the last residual."""
    N = np.asarray(N, dtype=float)
    res = huber_regression(N, obs, cfg)
    rows, cols = obs.support.rows, obs.support.cols
    for _ in range(cfg.l_max - 1):
        resid = np.abs(obs.dense() - N @ res.C)[rows, cols]
        # residuals up to a few times the typical one share the largest knee,
        # so only clear outliers get a cheaper l1 price on the next pass
        floor = max(cfg.reweight_floor, cfg.reweight_spread * float(np.median(resid)))
        w = 1.0 / np.maximum(resid, floor)
        w /= np.median(w)
        scale = np.ones(obs.shape)
        scale[rows, cols] = w
        res = huber_regression(N, obs, cfg, knee_scale=scale)
    return res


@dataclass(frozen=True)
class EtaGate:
    use_huber: bool
    eta_next: float
    threshold: float


def eta_gate(eta_current: float, eta0: float, eta_shrink: float = 0.8) -> EtaGate:
    """Heuristic phase is on while eta > eta0; E entries below eta are then dropped."""
    if eta_current < 0:
        raise ValueError("eta must be nonnegative")
    on = eta_current > eta0
    return EtaGate(on, eta_shrink * eta_current, eta_current if on else 0.0)


def heuristic_phase_bound(eta_init: float, eta0: float, eta_shrink: float) -> int:
    """Last iteration index at which the heuristic phase can still be on."""
    if eta_init <= eta0:
        return 0
    return math.ceil(math.log(eta0 / eta_init) / math.log(eta_shrink)) + 1


@functools.lru_cache(maxsize=256)
def _keep_masks(p, s):
    keep = np.ones((math.comb(p, s), p), dtype=bool)
    if s:
        drops = np.array(list(itertools.combinations(range(p), s)))
        keep[np.arange(len(drops))[:, None], drops] = False
    keep.setflags(write=False)
    return keep


def _trimmed_column(A, y, thr, s_max, budget):
    """Smallest drop set whose least-squares fit leaves every kept residual within thr.

    Tries every subset of each size in turn; returns (c, dropped rows) or
    None when the budget runs out before an acceptable fit shows up.
    """
    p, r = A.shape
    for s in range(0, s_max + 1):
        if p - s <= r or math.comb(p, s) > budget:
            return None
        keep = _keep_masks(p, s)
        KA = keep[:, :, None] * A[None, :, :]
        G = np.swapaxes(KA, 1, 2) @ A
        rhs = KA.transpose(0, 2, 1) @ y
        try:
            c = np.linalg.solve(G, rhs[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            continue
        res = y[None, :] - c @ A.T
        kept = np.where(keep, res, 0.0)
        ss = np.einsum("kp,kp->k", kept, kept)
        best = int(np.argmin(ss))
        if np.max(np.abs(kept[best])) <= thr:
            return c[best], ~keep[best]
    return None


def trimmed_refit(N, obs: ObservedMatrix, C, E, thr, s_max=4, budget=5000):
    """Replace column fits by exhaustive trimmed least squares where affordable.

    Columns where no subset within the budget gives inliers inside ``thr``
    keep the (C, E) passed in.
    """
    N = np.asarray(N, dtype=float)
    C, E = C.copy(), E.copy()
    What = obs.dense()
    mask = obs.mask()
    for j in range(obs.n):
        rows = np.flatnonzero(mask[:, j])
        if rows.size == 0:
            continue
        A, y = N[rows], What[rows, j]
        got = _trimmed_column(A, y, thr, s_max, budget)
        if got is None:
            continue
        c, dropped = got
        C[:, j] = c
        E[:, j] = 0.0
        E[rows[dropped], j] = y[dropped] - A[dropped] @ c
    return C, E


def robust_refit(N, obs: ObservedMatrix, cfg: HuberConfig, thr, budget=5000):
    """One heuristic W update: reweighted Huber, then trimmed refits on both sides.

    The column pass works against N; the row pass works against the row
    space of the column result, which lets a sparsely observed row with
    outliers be repaired too.
    """
    N = np.asarray(N, dtype=float)
    hr = reweighted_huber(N, obs, cfg)
    if budget <= 0:
        return N @ hr.C
    C, _ = trimmed_refit(N, obs, hr.C, hr.E, thr, budget=budget)
    W = N @ C
    r = N.shape[1]
    V = np.linalg.svd(W, full_matrices=False)[2][:r].T
    obs_t = obs.transpose()
    Ct, _ = trimmed_refit(V, obs_t, V.T @ W.T, np.zeros(obs_t.shape), thr, budget=budget)
    return (V @ Ct).T

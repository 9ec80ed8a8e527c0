"""Rank-constrained W-subproblem solved over an orthonormal basis N.

For fixed N the coefficients C are eliminated in closed form column by
column; what remains is a nonlinear least-squares problem in vec(N),
minimized by Levenberg-Marquardt on the Gauss-Newton system.

vec() is column-major throughout: the entry N[a, p] sits at p*m + a.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import ObservedMatrix, SparseCorruption, orthonormalize

log = logging.getLogger(__name__)


class DegenerateColumnError(np.linalg.LinAlgError):
    """N^T D_i^2 N is singular for some column i."""


@dataclass(frozen=True, eq=False)
class WStepWorkspace:
    """Weights and targets of one W-subproblem.

    ``Hbar`` holds the column weights (the diagonals of D_i) and ``Bk`` the
    targets y_i as columns.
    """

    Hbar: np.ndarray
    Bk: np.ndarray

    @property
    def Bhat(self):
        return self.Bk / self.Hbar

    def F(self, W):
        """0.5 * ||Hbar o (W - Bhat)||^2, the W-subproblem up to a constant."""
        R = self.Hbar * W - self.Bk
        return 0.5 * float(np.vdot(R, R))


@dataclass(frozen=True)
class GaussNewtonSystem:
    JtJ: np.ndarray
    Jtr: np.ndarray
    objective: float


def build_workspace(obs: ObservedMatrix, W_k, E_k: SparseCorruption, beta1: float) -> WStepWorkspace:
    if beta1 <= 0:
        raise ValueError("beta1 must be positive")
    eps = obs.eps
    mask = obs.mask()
    W_k = np.asarray(W_k, dtype=float)
    on = math.sqrt(1.0 + beta1)
    off = math.sqrt(eps + eps * beta1)
    Hbar = np.where(mask, on, off)
    target_on = (obs.dense() - E_k.dense() + beta1 * W_k) / on
    target_off = (eps * beta1 / off) * W_k
    Bk = np.where(mask, target_on, target_off)
    Hbar.setflags(write=False)
    Bk.setflags(write=False)
    return WStepWorkspace(Hbar, Bk)


def _column_terms(N, ws):
    """Per-column Gram inverses, coefficients C (r x n) and residuals R (m x n)."""
    N = np.asarray(N, dtype=float)
    D2 = ws.Hbar**2
    G = np.einsum("ai,ap,aq->ipq", D2, N, N)
    rhs = N.T @ (ws.Hbar * ws.Bk)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise DegenerateColumnError("N^T D_i^2 N is not positive definite") from exc
    Linv = np.linalg.inv(L)
    Ginv = np.einsum("iup,iuq->ipq", Linv, Linv)
    C = np.einsum("ipq,qi->pi", Ginv, rhs)
    R = ws.Bk - ws.Hbar * (N @ C)
    return Ginv, Linv, C, R


def subspace_objective(N, ws: WStepWorkspace) -> float:
    """f(N) = 0.5 * sum_i ||y_i - Q_i(N) y_i||^2.

    Also valid for non-orthonormal full-rank N; f depends only on span(N).
    """
    _, _, _, R = _column_terms(N, ws)
    return 0.5 * float(np.vdot(R, R))


def recover_W(N, ws: WStepWorkspace) -> np.ndarray:
    """Columns W_i = D_i^{-1} Q_i(N) y_i = N C_i."""
    N = np.asarray(N, dtype=float)
    _, _, C, _ = _column_terms(N, ws)
    return N @ C


def gauss_newton_system(N, ws: WStepWorkspace) -> GaussNewtonSystem:
    """Sum over columns of J_i^T J_i and J_i^T r_i.

    With A_i = D_i N (N^T D_i^2 N)^{-1} one has A_i^T y_i = C_i and
    A_i^T A_i = (N^T D_i^2 N)^{-1}, which is what the assembly below uses.
    """
    N = np.asarray(N, dtype=float)
    m, r = N.shape
    n = ws.Bk.shape[1]
    Ginv, Linv, C, R = _column_terms(N, ws)
    D2 = ws.Hbar**2
    S = ws.Hbar * R

    Jtr = (S @ C.T).reshape(-1, order="F")

    # (C_i C_i^T) kron D_i^2 : block diagonal in the row index a
    diag_part = np.einsum("ai,pi,qi->apq", D2, C, C)
    # (C_i C_i^T) kron D_i Q_i D_i, factored as Phi Phi^T
    K = np.einsum("ai,at->ita", D2, N)
    Kt = np.einsum("ita,iut->iua", K, Linv)
    Phi = np.einsum("pi,iua->apiu", C, Kt).reshape(m * r, n * r, order="F")
    # T^T [(D_i r_i r_i^T D_i) kron (A_i^T A_i)] T, factored as Psi Psi^T
    Psi = np.einsum("iup,ai->apiu", Linv, S).reshape(m * r, n * r, order="F")

    block = np.zeros((m, r, m, r))
    idx = np.arange(m)
    block[idx, :, idx, :] = diag_part
    JtJ = block.reshape(m * r, m * r, order="F") + Psi @ Psi.T - Phi @ Phi.T
    JtJ = 0.5 * (JtJ + JtJ.T)
    return GaussNewtonSystem(JtJ, Jtr, 0.5 * float(np.vdot(R, R)))


def jacobian_blocks(N, ws: WStepWorkspace):
    """Explicit J_i (m x mr) for every column; O(n m^2 r), for testing."""
    N = np.asarray(N, dtype=float)
    m, r = N.shape
    n = ws.Bk.shape[1]
    Ginv, _, C, R = _column_terms(N, ws)
    T = np.zeros((m * r, m * r))
    for a in range(m):
        for p in range(r):
            T[a * r + p, p * m + a] = 1.0
    out = []
    for i in range(n):
        d = ws.Hbar[:, i]
        A = (d[:, None] * N) @ Ginv[i]
        Q = A @ (d[:, None] * N).T
        first = np.kron(C[:, i][None, :], (np.eye(m) - Q) * d[None, :])
        second = np.kron((d * R[:, i])[None, :], A) @ T
        out.append(first + second)
    return out


def _solve_damped(JtJ, Jtr, lam):
    """(JtJ + lam I)^-1 Jtr, or None when round-off leaves the matrix indefinite."""
    A = JtJ + lam * np.eye(JtJ.shape[0])
    try:
        c = scipy.linalg.cho_factor(A, check_finite=False)
    except np.linalg.LinAlgError:
        return None
    return scipy.linalg.cho_solve(c, Jtr, check_finite=False)


@dataclass
class LMResult:
    N: np.ndarray
    W: np.ndarray
    objective: float
    initial_objective: float
    iterations: int
    trace: list
    stalled: bool


def lm_gn_solve(N_init, ws: WStepWorkspace, lam=1e-6, rho=10.0, tol=1e-10, max_iter=100,
                lam_max=1e32) -> LMResult:
    """Levenberg-Marquardt over vec(N), re-orthonormalizing after each step.

    A trial step is accepted only on strict decrease of f. Stops when the
    relative decrease of an accepted step drops below ``tol``, after
    ``max_iter`` outer steps, or when damping exceeds ``lam_max``.
    """
    N = orthonormalize(N_init)
    m, r = N.shape
    sys = gauss_newton_system(N, ws)
    f0 = f = sys.objective
    # residual at round-off level relative to the targets counts as an exact fit
    f_floor = 0.5 * (1e-14) ** 2 * float(np.vdot(ws.Bk, ws.Bk))
    trace = [f]
    stalled = False
    it = 0
    while it < max_iter:
        it += 1
        if not np.any(sys.Jtr) or f <= f_floor:
            break
        accepted = False
        while lam <= lam_max:
            dx = _solve_damped(sys.JtJ, sys.Jtr, lam)
            if dx is None:
                # assembled JtJ can be indefinite at round-off level; more damping fixes it
                lam *= rho
                continue
            N_try = orthonormalize(N + dx.reshape(m, r, order="F"))
            try:
                f_try = subspace_objective(N_try, ws)
            except DegenerateColumnError:
                f_try = math.inf
            if f_try < f:
                accepted = True
                break
            lam *= rho
        if not accepted:
            stalled = True
            log.debug("LM stalled at lambda=%g after %d steps", lam, it)
            break
        lam /= rho
        rel = (f - f_try) / max(f, 1e-300)
        N, f = N_try, f_try
        trace.append(f)
        if rel < tol:
            break
        sys = gauss_newton_system(N, ws)
    W = recover_W(N, ws)
    return LMResult(N, W, f, f0, it, trace, stalled)

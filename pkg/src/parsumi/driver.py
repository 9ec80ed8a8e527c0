"""Outer proximal alternating loop over (W, E) with the majorization safeguard."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import (
    IterationState,
    ObservedMatrix,
    SolverConfig,
    SparseCorruption,
    merit_f,
    orthonormalize,
    project_observed,
)
from .datagen import rmse_visible
from .estep import solve_sparse_step, update_corruption
from .heuristics import HuberConfig, eta_gate, robust_refit
from .init_apg import ApgConfig, continuation_init
from .majorize import compute_weights, majorized_minimizer
from .wstep import build_workspace, lm_gn_solve

log = logging.getLogger(__name__)


class MonotonicityError(AssertionError):
    """The augmented merit increased during a pure iteration."""


class NumericalFailure(FloatingPointError):
    pass


@dataclass
class SolveReport:
    iterations: int = 0
    merit_trace: list = field(default_factory=list)
    decrease_trace: list = field(default_factory=list)
    safeguard_activations: int = 0
    safeguard_iterations: list = field(default_factory=list)
    heuristic_iterations: int = 0
    converged: bool = False
    rmse_visible: float = math.nan
    wall_time: float = 0.0
    eta_init: float = 0.0
    eta_floor: float = 0.0
    stop_reason: str = ""

    def to_dict(self):
        return asdict(self)


@dataclass
class SolveResult:
    W: np.ndarray
    E: SparseCorruption
    N: np.ndarray
    report: SolveReport


def merit_monitor(prev: IterationState, nxt: IterationState, obs: ObservedMatrix,
                  beta1: float, beta2: float) -> float:
    """L(prev) - [L(next) + 0.5||dW||_S^2 + 0.5||dE||_T^2], S = beta1 (H o H), T = beta2."""
    H = obs.weights()
    dW = H * (nxt.W - prev.W)
    dE = nxt.E.values - prev.E.values
    s_term = 0.5 * beta1 * float(np.vdot(dW, dW))
    t_term = 0.5 * beta2 * float(np.vdot(dE, dE))
    return prev.merit - (nxt.merit + s_term + t_term)


def _leading_basis(W, r):
    U, _, _ = np.linalg.svd(W, full_matrices=False)
    return U[:, :r].copy()


def default_eta(obs: ObservedMatrix, E0: SparseCorruption, floor_ratio: float = 1e-2):
    """(eta_init, eta0): largest initial corruption and a fixed fraction of it.

    A residual-based noise estimate is too pessimistic this early (the
    convex start is shrunk), so the floor is tied to the corruption scale.
    """
    nz = np.abs(E0.values[E0.values != 0])
    eta_init = float(nz.max()) if nz.size else float(np.median(np.abs(obs.values)))
    return eta_init, floor_ratio * eta_init


def parsumi_solve(obs: ObservedMatrix, cfg: SolverConfig, init=None, apg_cfg: ApgConfig | None = None,
                  lm_start_hook=None) -> SolveResult:
    """Alternate the rank-r W-step and the sparse E-step until both stall.

    ``init`` is ``(W0, E0, N0)``; if omitted the convex initializer is run.
    ``lm_start_hook(k, N, ws)`` may replace the basis LM starts from at outer
    iteration k (``ws`` is that iteration's W-step workspace); it exists to
    stress the safeguard.
    """
    t0 = time.perf_counter()
    cfg = cfg.resolve(obs)
    r, n0, k_e = cfg.rank, cfg.n0, cfg.k_e
    if init is None:
        ci = continuation_init(obs, r, apg_cfg, n0=n0, k_e=k_e)
        W, N = ci.W0, ci.N0
        E = SparseCorruption.from_values(obs.support, ci.E0.values, n0, k_e)
    else:
        W0, E0, N0 = init
        W = np.array(W0, dtype=float)
        if isinstance(E0, SparseCorruption):
            ev = E0.values
        else:
            E0 = np.asarray(E0, dtype=float)
            ev = E0 if E0.ndim == 1 else project_observed(E0, obs.support)
        E = SparseCorruption.from_values(obs.support, solve_sparse_step(ev, n0, k_e), n0, k_e)
        N = orthonormalize(N0) if N0 is not None else _leading_basis(W, r)

    report = SolveReport()
    huber_on = cfg.use_huber and n0 > 0
    eta_init, eta0 = default_eta(obs, E)
    eta = cfg.eta_init if cfg.eta_init is not None else eta_init
    eta0 = cfg.eta_floor if cfg.eta_floor is not None else eta0
    report.eta_init, report.eta_floor = eta, eta0
    hcfg = HuberConfig(eta0=max(eta0, 1e-12), eta_shrink=cfg.eta_shrink, l_max=max(cfg.huber_reweight_iters, 1))

    state = IterationState(W, E, N, merit_f(W, E, obs), 0)
    report.merit_trace.append(state.merit)
    slack = 1e-10

    for k in range(1, cfg.outer_max_iter + 1):
        W, E, N = state.W, state.E, state.N
        ws = build_workspace(obs, W, E, cfg.beta1)
        N_start = N if lm_start_hook is None else lm_start_hook(k, N, ws)
        lm = lm_gn_solve(N_start, ws, lam=cfg.lm_lambda_init, rho=cfg.lm_rho,
                         tol=cfg.lm_tol, max_iter=cfg.lm_max_iter)
        W_qm = majorized_minimizer(W, ws, compute_weights(ws.Hbar), r)
        F_lm, F_qm, F_prev = ws.F(lm.W), ws.F(W_qm), ws.F(W)
        if F_lm <= F_qm:
            W_new, N_new = lm.W, lm.N
        else:
            W_new, N_new = W_qm, _leading_basis(W_qm, r)
            report.safeguard_activations += 1
            report.safeguard_iterations.append(k)
        if min(F_lm, F_qm) > F_prev:
            # both candidates lost to round-off; W itself is feasible
            W_new, N_new = W, N

        gate = eta_gate(eta, eta0, cfg.eta_shrink) if huber_on else eta_gate(0.0, 0.0)
        if gate.use_huber:
            W_new = robust_refit(N_new, obs, hcfg, gate.threshold, cfg.trim_budget)
            N_new = _leading_basis(W_new, r)
            report.heuristic_iterations += 1
        eta = gate.eta_next
        E_new = update_corruption(obs, W_new, E, cfg.beta2, gate=gate.threshold)

        merit = merit_f(W_new, E_new, obs)
        if not math.isfinite(merit):
            raise NumericalFailure(f"non-finite merit at iteration {k}")
        nxt = IterationState(W_new, E_new, N_new, merit, k, pure=not gate.use_huber)
        dec = merit_monitor(state, nxt, obs, cfg.beta1, cfg.beta2)
        report.decrease_trace.append(dec)
        report.merit_trace.append(merit)
        if nxt.pure and cfg.check_monotone and dec < -slack:
            raise MonotonicityError(f"augmented merit rose by {-dec:.3e} at iteration {k}")

        dW = float(np.linalg.norm(W_new - W))
        dE = float(np.linalg.norm(E_new.values - E.values))
        nW = max(float(np.linalg.norm(W)), 1e-12)
        # a corruption term fading towards zero would never pass a purely relative test
        nE = max(E.norm(), nW)
        log.debug("iter %d merit=%.6e dW=%.2e dE=%.2e lm_it=%d pure=%s", k, merit, dW, dE, lm.iterations, nxt.pure)
        state = nxt
        report.iterations = k
        if nxt.pure and dW < nW * cfg.outer_tol and dE < nE * cfg.outer_tol:
            report.converged = True
            report.stop_reason = "tolerance"
            break
    else:
        report.stop_reason = "max_iter"

    report.rmse_visible = rmse_visible(state.W, obs)
    report.wall_time = time.perf_counter() - t0
    return SolveResult(state.W, state.E, state.N, report)

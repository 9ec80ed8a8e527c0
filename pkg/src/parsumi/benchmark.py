"""Phase-diagram harness: grid of (missing, corruption) cells, several trials each."""

from __future__ import annotations

import csv
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import SolverConfig
from .datagen import SyntheticSpec, generate, oracle_rmse, rmse, rmse_visible
from .driver import parsumi_solve
from .init_apg import ApgConfig, continuation_init

SOLVERS = ("parsumi", "apg-only")
CSV_FIELDS = ("missing_frac", "corrupt_frac", "sigma", "trial", "rmse", "rmse_visible",
              "oracle", "success", "iters", "safeguards", "seconds")


@dataclass
class PhaseConfig:
    missing: tuple = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    corruption: tuple = (0.0, 0.05, 0.1, 0.15, 0.2)
    trials: int = 10
    m: int = 40
    n: int = 60
    rank: int = 4
    sigma: float = 0.01
    corruption_range: tuple = (-2.0, 2.0)
    n0_factor: float = 1.2
    master_seed: int = 0
    solvers: tuple = ("parsumi",)
    success_factor: float = 2.0
    solver_cfg: dict = field(default_factory=dict)


@dataclass
class TrialRecord:
    missing_frac: float
    corrupt_frac: float
    sigma: float
    trial: int
    rmse: float
    rmse_visible: float
    oracle: float
    success: bool
    iters: int
    safeguards: int
    seconds: float
    solver: str = "parsumi"
    error: str = ""


@dataclass
class CellSummary:
    missing_frac: float
    corrupt_frac: float
    solver: str
    mean_excess: float
    median_excess: float
    success_rate: float
    mean_iters: float
    failures: int
    median_oracle: float = math.nan


def trial_seed(master: int, cell: int, trial: int) -> int:
    """Seed that depends only on (master, cell, trial), never on scheduling."""
    return int(np.random.SeedSequence([master, cell, trial]).generate_state(1, dtype=np.uint64)[0])


def is_success(err: float, oracle: float, factor: float = 2.0) -> bool:
    # the 1e-6 floor makes noiseless cells (oracle = 0) meaningful
    return bool(math.isfinite(err) and err - oracle <= factor * oracle + 1e-6)


def run_trial(job) -> list:
    """One generated instance, solved by every requested solver."""
    cfg, cell, missing, corrupt, trial = job
    spec = SyntheticSpec(cfg.m, cfg.n, cfg.rank, missing, corrupt, tuple(cfg.corruption_range),
                         cfg.sigma, seed=trial_seed(cfg.master_seed, cell, trial))
    inst = generate(spec)
    obs = inst.obs
    e = spec.corrupted_count
    orc = oracle_rmse(cfg.m, cfg.n, cfg.rank, spec.observed_count, e, cfg.sigma)
    n0 = math.ceil(cfg.n0_factor * e)
    out = []
    for solver in cfg.solvers:
        t0 = time.perf_counter()
        iters = safeguards = 0
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                if solver == "parsumi":
                    res = parsumi_solve(obs, SolverConfig(rank=cfg.rank, n0=n0, **cfg.solver_cfg))
                    W = res.W
                    iters, safeguards = res.report.iterations, res.report.safeguard_activations
                elif solver == "apg-only":
                    ci = continuation_init(obs, cfg.rank, ApgConfig(), n0=n0)
                    W, iters = ci.W_convex, ci.iterations
                else:
                    raise ValueError(f"unknown solver {solver!r}")
            err, vis, msg = rmse(W, inst.W_true), rmse_visible(W, obs), ""
        except Exception as exc:  # recorded, not raised
            err = vis = math.nan
            msg = f"{type(exc).__name__}: {exc}"
        out.append(TrialRecord(missing, corrupt, cfg.sigma, trial, err, vis, orc,
                               is_success(err, orc, cfg.success_factor), iters, safeguards,
                               time.perf_counter() - t0, solver, msg))
    return out


def worker_count(requested: int | None = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("PARSUMI_THREADS")
    if cap:
        n = min(n, max(int(cap), 1))
    return max(n, 1)


def phase_diagram(cfg: PhaseConfig, workers: int | None = None) -> list:
    """All trial records, ordered by (cell, trial, solver) whatever the worker count."""
    for s in cfg.solvers:
        if s not in SOLVERS:
            raise ValueError(f"unknown solver {s!r}; choose from {', '.join(SOLVERS)}")
    jobs = []
    cell = 0
    for missing in cfg.missing:
        for corrupt in cfg.corruption:
            jobs.extend((cfg, cell, missing, corrupt, t) for t in range(cfg.trials))
            cell += 1
    workers = worker_count(workers)
    if workers == 1:
        results = map(run_trial, jobs)
    else:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(run_trial, jobs))
    return [rec for batch in results for rec in batch]


def summarize(records) -> list:
    cells = {}
    for rec in records:
        cells.setdefault((rec.missing_frac, rec.corrupt_frac, rec.solver), []).append(rec)
    out = []
    for (mf, cf, solver), recs in cells.items():
        excess = np.array([r.rmse - r.oracle for r in recs])
        ok = np.isfinite(excess)
        out.append(CellSummary(
            mf, cf, solver,
            float(np.mean(excess[ok])) if ok.any() else math.nan,
            float(np.median(np.where(ok, excess, np.inf))),
            float(np.mean([r.success for r in recs])),
            float(np.mean([r.iters for r in recs])),
            int(np.sum(~ok)),
            float(np.median([r.oracle for r in recs])),
        ))
    return out


def _fmt9(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".9g")


def write_csv(path, records, tag_solver: bool | None = None):
    """Write the trial table; a trailing ``solver`` column is added when several solvers ran."""
    if tag_solver is None:
        tag_solver = len({r.solver for r in records}) > 1
    fields = list(CSV_FIELDS) + (["solver"] if tag_solver else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for rec in records:
            d = asdict(rec)
            w.writerow([d[f] if f == "solver" else _fmt9(d[f]) for f in fields])


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

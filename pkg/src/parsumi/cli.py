"""Command line entry point: ``parsumi complete | simulate | phase-diagram``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import benchmark
from .core import SolverConfig
from .datagen import ParameterError, SyntheticSpec, generate
from .driver import parsumi_solve
from .formats import (
    FormatError,
    read_config,
    write_dense,
    write_observations,
    write_triplets,
)

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2

# shared flag -> (type, built-in default)
SHARED = {
    "rank": (int, None),
    "n0": (int, None),
    "ke": (float, None),
    "beta1": (float, None),
    "beta2": (float, None),
    "tol": (float, 1e-6),
    "max_iter": (int, 300),
    "seed": (int, 0),
    "out_dir": (str, "."),
    "no_huber": (bool, False),
    "no_init": (bool, False),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _shared(p):
    p.add_argument("-r", "--rank", type=int, default=None, help="target rank")
    p.add_argument("--n0", type=int, default=None, help="cap on the number of corrupted entries")
    p.add_argument("--ke", type=float, default=None, help="norm bound on the corruption matrix")
    p.add_argument("--beta1", type=float, default=None)
    p.add_argument("--beta2", type=float, default=None)
    p.add_argument("--tol", type=float, default=None, help="relative change that stops the outer loop")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="flat 'key = value' file; flags override it")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--no-huber", dest="no_huber", action="store_const", const=True, default=None,
                   help="skip the robust refit phase")
    p.add_argument("--no-init", dest="no_init", action="store_const", const=True, default=None,
                   help="start from zeros instead of the convex initializer")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="parsumi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("complete", help="complete an observation file")
    p.add_argument("observations", help="text file: 'm n' header then 'i j value' lines")
    _shared(p)

    p = sub.add_parser("simulate", help="write a synthetic instance")
    _shared(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--missing", type=float, default=0.0)
    p.add_argument("--corrupt", type=float, default=0.0)
    p.add_argument("--corrupt-range", dest="corrupt_range", type=float, nargs=2, default=(-5.0, 5.0),
                   metavar=("LO", "HI"))
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--decay", type=float, default=0.0)

    p = sub.add_parser("phase-diagram", help="grid benchmark over missing and corrupted fractions")
    _shared(p)
    p.add_argument("--m", type=int, default=40)
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--missing", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8")
    p.add_argument("--corrupt", default="0,0.05,0.1,0.15,0.2")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--corrupt-range", dest="corrupt_range", type=float, nargs=2, default=(-2.0, 2.0),
                   metavar=("LO", "HI"))
    p.add_argument("--solvers", default="parsumi", help="comma list of: " + ", ".join(benchmark.SOLVERS))
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", default="phase_diagram.csv", help="file name inside --out-dir")
    p.add_argument("--no-timing", dest="no_timing", action="store_true",
                   help="write 0 in the seconds column so reruns are byte-identical")
    return parser


def _to_bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def resolve_options(args) -> dict:
    """CLI flags override config-file keys, which override built-in defaults."""
    file_opts = read_config(args.config) if args.config else {}
    unknown = set(file_opts) - set(SHARED)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for key, (typ, default) in SHARED.items():
        value = getattr(args, key)
        if value is None and key in file_opts:
            raw = file_opts[key]
            try:
                value = _to_bool(raw) if typ is bool else typ(raw)
            except ValueError as exc:
                raise UsageError(f"config key {key}: {exc}") from None
        out[key] = default if value is None else value
    return out


def _solver_config(opts) -> SolverConfig:
    return SolverConfig(rank=opts["rank"], n0=opts["n0"], k_e=opts["ke"], beta1=opts["beta1"],
                        beta2=opts["beta2"], outer_tol=opts["tol"], outer_max_iter=opts["max_iter"],
                        use_huber=not opts["no_huber"], rng_seed=opts["seed"])


def cmd_complete(args, opts) -> int:
    from .formats import read_observations

    if opts["rank"] is None:
        raise UsageError("--rank is required")
    obs = read_observations(args.observations)
    if not 1 <= opts["rank"] <= min(obs.shape):
        raise UsageError(f"--rank must lie in [1, {min(obs.shape)}]")
    cfg = _solver_config(opts)
    init = None
    if opts["no_init"]:
        init = (np.zeros(obs.shape), np.zeros(obs.shape), None)
    res = parsumi_solve(obs, cfg, init=init)
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_dense(out / "W.csv", res.W)
    write_triplets(out / "E.csv", res.E)
    report = res.report.to_dict()
    report["config"] = {k: v for k, v in asdict(cfg.resolve(obs)).items()}
    report["input"] = str(args.observations)
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, default=float)
    print(f"iterations={res.report.iterations} converged={res.report.converged} "
          f"rmse_visible={res.report.rmse_visible:.6g}")
    return EXIT_OK if res.report.converged else EXIT_NOT_CONVERGED


def cmd_simulate(args, opts) -> int:
    if opts["rank"] is None:
        raise UsageError("--rank is required")
    spec = SyntheticSpec(args.m, args.n, opts["rank"], args.missing, args.corrupt,
                         tuple(args.corrupt_range), args.sigma, args.decay, seed=opts["seed"])
    inst = generate(spec)
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_observations(out / "observations.txt", inst.obs)
    write_dense(out / "W_true.csv", inst.W_true)
    write_triplets(out / "E_true.csv", inst.E_true)
    print(f"seed={spec.seed} observed={spec.observed_count} corrupted={spec.corrupted_count}")
    return EXIT_OK


def _fractions(text, name):
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"--{name} expects a comma list of fractions") from None
    if not vals:
        raise UsageError(f"--{name} is empty")
    return vals


def cmd_phase_diagram(args, opts) -> int:
    solvers = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
    bad = [s for s in solvers if s not in benchmark.SOLVERS]
    if bad or not solvers:
        raise UsageError(f"--solvers must be a comma list of {', '.join(benchmark.SOLVERS)}")
    solver_cfg = {"outer_tol": opts["tol"], "outer_max_iter": opts["max_iter"],
                  "use_huber": not opts["no_huber"]}
    for key, name in (("beta1", "beta1"), ("beta2", "beta2"), ("ke", "k_e")):
        if opts[key] is not None:
            solver_cfg[name] = opts[key]
    cfg = benchmark.PhaseConfig(
        missing=_fractions(args.missing, "missing"), corruption=_fractions(args.corrupt, "corrupt"),
        trials=args.trials, m=args.m, n=args.n, rank=opts["rank"] or 4, sigma=args.sigma,
        corruption_range=tuple(args.corrupt_range), master_seed=opts["seed"], solvers=solvers,
        solver_cfg=solver_cfg,
    )
    records = benchmark.phase_diagram(cfg, workers=args.workers)
    if args.no_timing:
        for rec in records:
            rec.seconds = 0.0
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    benchmark.write_csv(out / args.output, records, tag_solver=len(solvers) > 1)
    for c in benchmark.summarize(records):
        print(f"{c.solver:9s} missing={c.missing_frac:.2f} corrupt={c.corrupt_frac:.2f} "
              f"median_excess={c.median_excess:.3g} success={c.success_rate:.2f} iters={c.mean_iters:.1f}")
    return EXIT_OK


COMMANDS = {"complete": cmd_complete, "simulate": cmd_simulate, "phase-diagram": cmd_phase_diagram}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        opts = resolve_options(args)
        if not args.verbose:
            warnings.simplefilter("ignore", RuntimeWarning)
        return COMMANDS[args.command](args, opts)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"parsumi: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FormatError, ParameterError, FileNotFoundError, ValueError) as exc:
        print(f"parsumi: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

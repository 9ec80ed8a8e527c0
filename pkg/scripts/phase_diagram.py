"""Grid benchmark on 40x60 rank-4 matrices; writes a CSV and prints median excess / oracle.

    python3 scripts/phase_diagram.py --out phase.csv [--trials 10] [--solvers parsumi,apg-only]
"""

import argparse

from parsumi import benchmark


def fractions(text):
    return tuple(float(x) for x in text.split(","))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--missing", type=fractions, default=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8))
    ap.add_argument("--corrupt", type=fractions, default=(0.0, 0.05, 0.1, 0.15, 0.2))
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--solvers", default="parsumi")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default="phase_diagram.csv")
    args = ap.parse_args()
    solvers = tuple(args.solvers.split(","))
    cfg = benchmark.PhaseConfig(missing=args.missing, corruption=args.corrupt, trials=args.trials,
                                master_seed=args.seed, solvers=solvers)
    records = benchmark.phase_diagram(cfg, workers=args.workers)
    benchmark.write_csv(args.out, records, tag_solver=len(solvers) > 1)

    cells = {(c.solver, c.missing_frac, c.corrupt_frac): c for c in benchmark.summarize(records)}
    for solver in solvers:
        print(f"\n{solver}: median (RMSE - oracle) / oracle; rows = missing, columns = corrupted")
        print("        " + "".join(f"{cf:>8.0%}" for cf in args.corrupt))
        for mf in args.missing:
            row = [cells[(solver, mf, cf)] for cf in args.corrupt]
            print(f"{mf:>6.0%}  " + "".join(f"{c.median_excess / max(c.median_oracle, 1e-12):8.2f}" for c in row))
    print(f"\nwrote {len(records)} rows to {args.out}")


if __name__ == "__main__":
    main()

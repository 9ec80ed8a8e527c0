"""Share of generated instances where every row and column can outvote its corruptions.

A line with p observed entries, k of them corrupted, is only pinned down by
a rank-r model when p >= r + 2k + 1: a clean r-subset must still agree with
a strict majority of the rest. Reports that share per grid cell.

    python3 scripts/identifiability.py --m 40 --n 60 --rank 4 --instances 400
"""

import argparse

import numpy as np

from parsumi.benchmark import trial_seed
from parsumi.datagen import SyntheticSpec, generate


def identifiable(inst, r):
    mask = inst.obs.mask()
    bad = inst.E_true != 0
    for axis in (0, 1):
        p = mask.sum(axis=axis)
        k = bad.sum(axis=axis)
        if np.any(p < r + 2 * k + 1):
            return False
    return True


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=40)
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--rank", type=int, default=4)
    ap.add_argument("--instances", type=int, default=400)
    ap.add_argument("--missing", default="0,0.2,0.4,0.6,0.7")
    ap.add_argument("--corrupt", default="0,0.05,0.1")
    args = ap.parse_args()
    missing = [float(x) for x in args.missing.split(",")]
    corrupt = [float(x) for x in args.corrupt.split(",")]
    print("missing  " + "".join(f"{c:>8.0%}" for c in corrupt))
    cell = 0
    for mf in missing:
        row = []
        for cf in corrupt:
            ok = 0
            for t in range(args.instances):
                spec = SyntheticSpec(args.m, args.n, args.rank, mf, cf, (-2.0, 2.0), 0.01,
                                     seed=trial_seed(0, cell, t))
                ok += identifiable(generate(spec), args.rank)
            row.append(ok / args.instances)
            cell += 1
        print(f"{mf:>6.0%}   " + "".join(f"{v:8.3f}" for v in row))


if __name__ == "__main__":
    main()

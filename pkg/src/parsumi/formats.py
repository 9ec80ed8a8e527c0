"""Plain-text file formats.

Observation file::

    # comment
    m n
    i j value        (0-based, whitespace separated, one per line)

Dense matrices are header-less CSV; corruptions are ``i,j,value`` triplets.
All floats are written with 17 significant digits so reading back is exact.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .core import ObservedMatrix, SparseCorruption


class FormatError(ValueError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.path, self.line = path, line


def _fmt(x) -> str:
    return format(float(x), ".17g")


def read_observations(path, eps=1e-10) -> ObservedMatrix:
    path = Path(path)
    header = None
    rows, cols, vals = [], [], []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if header is None:
                    if len(parts) != 2:
                        raise ValueError("header must be 'm n'")
                    header = (int(parts[0]), int(parts[1]))
                    if min(header) <= 0:
                        raise ValueError("matrix dimensions must be positive")
                    continue
                if len(parts) != 3:
                    raise ValueError("expected 'i j value'")
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise FormatError(path, lineno, str(exc)) from None
            if not (0 <= i < header[0] and 0 <= j < header[1]):
                raise FormatError(path, lineno, f"index ({i}, {j}) outside {header[0]}x{header[1]}")
            rows.append(i)
            cols.append(j)
            vals.append(v)
    if header is None:
        raise FormatError(path, 0, "missing 'm n' header")
    try:
        return ObservedMatrix.from_entries(header[0], header[1], rows, cols, vals, eps)
    except ValueError as exc:
        raise FormatError(path, 0, str(exc)) from None


def write_observations(path, obs: ObservedMatrix):
    with Path(path).open("w") as fh:
        fh.write(f"{obs.m} {obs.n}\n")
        for i, j, v in zip(obs.support.rows, obs.support.cols, obs.values):
            fh.write(f"{i} {j} {_fmt(v)}\n")


def write_dense(path, M):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(M, dtype=float):
            w.writerow([_fmt(x) for x in row])


def read_dense(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        return np.array([[float(x) for x in row] for row in csv.reader(fh) if row], dtype=float)


def write_triplets(path, E):
    """Nonzero entries of a dense matrix or SparseCorruption as i,j,value."""
    if isinstance(E, SparseCorruption):
        it = zip(E.support.rows, E.support.cols, E.values)
    else:
        E = np.asarray(E, dtype=float)
        # column-major, matching the canonical observation order
        cols, rows = np.nonzero(E.T)
        it = zip(rows, cols, E[rows, cols])
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "value"])
        for i, j, v in it:
            if v != 0:
                w.writerow([int(i), int(j), _fmt(v)])


def read_triplets(path, shape) -> np.ndarray:
    out = np.zeros(shape)
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            out[int(rec["i"]), int(rec["j"])] = float(rec["value"])
    return out


def read_config(path) -> dict:
    """Flat ``key = value`` text; '#' starts a comment."""
    out = {}
    with Path(path).open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(path, lineno, "expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out

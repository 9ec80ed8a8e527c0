"""Robust low-rank matrix completion from partial, noisy and grossly corrupted data."""

from .core import (
    DimensionError,
    ObservedMatrix,
    SolverConfig,
    SparseCorruption,
    Support,
    embed_observed,
    merit_f,
    project_observed,
)
from .datagen import SyntheticSpec, generate, oracle_rmse, rmse, rmse_visible, support_f_measure
from .driver import MonotonicityError, SolveReport, SolveResult, parsumi_solve
from .init_apg import ApgConfig, apg_solve, continuation_init

__version__ = "0.1.0"

__all__ = [
    "ApgConfig",
    "DimensionError",
    "MonotonicityError",
    "ObservedMatrix",
    "SolveReport",
    "SolveResult",
    "SolverConfig",
    "SparseCorruption",
    "Support",
    "SyntheticSpec",
    "apg_solve",
    "continuation_init",
    "embed_observed",
    "generate",
    "merit_f",
    "oracle_rmse",
    "parsumi_solve",
    "project_observed",
    "rmse",
    "rmse_visible",
    "support_f_measure",
]

"""Inertial majorization-minimization ADMM with a low-rank representation application."""

from .errors import (
    AuditError,
    ConvexityError,
    DimensionError,
    EmptyBasisError,
    InvalidConstantError,
    InvalidParametersError,
    MatrixFormatError,
    NumericError,
    SolverAbort,
    UnsupportedAutoError,
)
from .framework import Block, ProblemSpec, SolverConfig, run
from .lrr import build_model, run_lrr

__all__ = [
    "AuditError",
    "ConvexityError",
    "DimensionError",
    "EmptyBasisError",
    "InvalidConstantError",
    "InvalidParametersError",
    "MatrixFormatError",
    "NumericError",
    "SolverAbort",
    "UnsupportedAutoError",
    "Block",
    "ProblemSpec",
    "SolverConfig",
    "run",
    "build_model",
    "run_lrr",
]

__version__ = "0.1.0"

"""Laplace-transform inversion for u' = Au + b(t) on automatically placed elliptic contours."""

from ._core import (
    ContourParams,
    ConvergenceRow,
    ConvergenceError,
    DimensionError,
    DomainError,
    Error,
    FeasibilityVerdict,
    GeometryError,
    ParseError,
    Problem,
    SingularSystemError,
    SolveOptions,
    SolveReport,
    StageError,
    TruncationResult,
    UnsupportedSourceError,
    black_scholes_grid,
    black_scholes_problem,
    canonical_cd_grid,
    canonical_cd_problem,
    diagonal_problem,
    load_problem,
    make_problem,
    pseudospectrum,
    reference_solution,
    solve,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"


def options(**kwargs):
    """SolveOptions with the given fields set, e.g. options(validate=True, z_l=-40)."""
    opts = SolveOptions()
    for key, value in kwargs.items():
        if not hasattr(opts, key):
            raise TypeError(f"unknown solve option '{key}'")
        setattr(opts, key, value)
    return opts

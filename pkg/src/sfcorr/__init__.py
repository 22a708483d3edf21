"""Exact and Monte Carlo statistics of self-fidelity correlations of unitary pairs."""

from .errors import (
    ConvergenceFailure,
    DegenerateReadout,
    DimensionMismatch,
    GridTooSmall,
    InvalidAxis,
    NotHermitian,
    NotNormalized,
    NotUnitary,
    OutOfRange,
    ParseError,
    SfcorrError,
)

__version__ = "0.1.0"

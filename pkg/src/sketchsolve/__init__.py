"""Sublinear sketch-and-sample solvers for low-rank linear systems.

The library implements the sample-only access model end to end: length
square sampling structures, the row/column sketch SVD, Monte Carlo
coefficient estimation, rejection sampling from implicit solution vectors,
exact direct baselines, synthetic problem generators with closed-form
ground truth, and the portfolio / movie-recommendation application
pipelines, plus a benchmark CLI that reproduces the error and runtime
studies.
"""

__version__ = "0.1.0"

from .errors import (DegenerateDistribution, EmptyUserHistory,
                     InternalInvariantViolation, InvalidInput,
                     NumericalInstability, RefusedAtScale, SamplerStalled,
                     SketchSolveError, UndefinedMetric)

__all__ = [
    "__version__",
    "SketchSolveError", "InvalidInput", "DegenerateDistribution",
    "NumericalInstability", "RefusedAtScale", "SamplerStalled",
    "InternalInvariantViolation", "EmptyUserHistory", "UndefinedMetric",
]

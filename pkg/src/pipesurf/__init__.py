"""Fourth-order compact finite differences for Poisson-type problems on pipe surfaces.

Modules: ``geometry`` (centerlines, cross-sections, the pipe map and its
metric), ``fields`` (scheme coefficients and manufactured solutions),
``discrete`` (grids, difference operators, discrete norms), ``compact``
(the compact operators and scheme blocks), ``solver`` (sparse assembly and
linear solves), ``harness`` (convergence studies) and ``cli``.
"""
from .errors import (DegenerateCurve, DomainError, InvalidParams, IoFailure, NonPositiveJacobian,
                     PipeSurfError, SolverBreakdown, StaggeringMismatch, UnknownKind)

__version__ = "0.1.0"

__all__ = [
    "DegenerateCurve", "DomainError", "InvalidParams", "IoFailure", "NonPositiveJacobian",
    "PipeSurfError", "SolverBreakdown", "StaggeringMismatch", "UnknownKind",
]

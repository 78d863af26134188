"""Exception types shared across the package."""


class PipeSurfError(Exception):
    """Base class for all package errors."""


class DegenerateCurve(PipeSurfError):
    """The centerline has vanishing speed or curvature where a frame is needed."""


class NonPositiveJacobian(PipeSurfError):
    """The pipe coordinate map folds over (Jacobian <= 0) at some point."""


class UnknownKind(PipeSurfError, KeyError):
    """A catalog lookup used a name that is not tabulated."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class InvalidParams(PipeSurfError, ValueError):
    """Catalog or configuration parameters are out of range."""


class StaggeringMismatch(PipeSurfError, ValueError):
    """Grid functions living on different staggerings were combined."""


class SolverBreakdown(PipeSurfError):
    """The linear solve failed (singular factor or stagnation)."""


class DomainError(PipeSurfError, ValueError):
    """Inputs outside the mathematical domain of a helper."""


class IoFailure(PipeSurfError, OSError):
    """Writing an output artifact failed."""

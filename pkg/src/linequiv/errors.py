"""Exception hierarchy shared by every module."""


class LinearizationError(Exception):
    """Base class for construction failures."""


class DimensionMismatch(LinearizationError, ValueError):
    pass


class SingularLeadingCoefficient(LinearizationError):
    pass


class NumericallySingular(LinearizationError):
    pass


class EvaluationAtExcludedPoint(LinearizationError):
    pass


class ExcludedPointUnavoidable(LinearizationError):
    pass


class StructuralMismatch(LinearizationError):
    pass


class SideConditionViolated(LinearizationError):
    pass


class DegreeTooHigh(LinearizationError):
    pass


class DiagonalDegreeViolation(LinearizationError):
    pass


class PreconditionViolated(LinearizationError):
    pass


class NonTerminating(LinearizationError):
    pass


class DegenerateDeterminant(LinearizationError):
    """det F(lambda) vanishes identically (singular matrix polynomial)."""


class RationalEntryError(LinearizationError):
    """The determinant oracle only accepts polynomial entries."""


class NonConvergence(LinearizationError):
    pass


class PostconditionFailed(LinearizationError):
    pass


class StageFailed(LinearizationError):
    """A construction error tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause

"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`ExpctlError`; validation failures additionally derive from
``ValueError`` so callers that only care about bad input can catch that.
"""


class ExpctlError(Exception):
    """Base class for all package errors."""


class ValidationError(ExpctlError, ValueError):
    """Input violates a documented invariant."""


class NotHermitian(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class ComplexAmplitudeError(ValidationError):
    """A real-amplitude pathway received complex amplitudes."""


class DomainError(ValidationError):
    """A scalar function is undefined somewhere it is evaluated."""


class NonRealResult(ExpctlError):
    pass


class Unidentifiable(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class ControllerFailure(ExpctlError):
    """Errors the closed loop logs and survives."""


class SingularSystem(ControllerFailure):
    pass


class InconsistentObservation(ControllerFailure):
    pass


class OutOfPlane(ControllerFailure):
    pass


class NoCorrection(ExpctlError):
    """Diagnosed rotation is too small to be worth a pulse."""


class NonUniqueGaps(ExpctlError):
    pass


class DegenerateObservable(ValidationError):
    pass


class NoCounterexample(ExpctlError):
    pass


class CloneBudgetExhausted(ControllerFailure):
    pass

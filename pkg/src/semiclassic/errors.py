"""Exception and warning types.

Numerical failures (``NumericalError``) and violations of the no-focal-point /
no-turning-point hypotheses (``HypothesisViolation``) are kept apart because
the CLI maps them to different exit codes.
"""


class SemiclassicError(Exception):
    """Base class for all library errors."""


class NumericalError(SemiclassicError):
    pass


class HypothesisViolation(SemiclassicError):
    """The requested quantity is undefined under the library's assumptions.

    ``time`` carries the offending time when one is known.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class StepSizeUnderflow(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class FocalPoint(HypothesisViolation):
    pass


class FocalPointInInterior(HypothesisViolation):
    pass


class SingularShootingJacobian(FocalPoint):
    """det J(t1, t0) vanished during Newton shooting; a focal point sits at t1."""


class TurningPoint(HypothesisViolation):
    pass


class TurningPointInInterval(TurningPoint):
    pass


class NotOneDof(SemiclassicError, ValueError):
    pass


class ConfigError(SemiclassicError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class GridTooCoarse(UserWarning):
    pass


class BoundaryLeak(UserWarning):
    pass

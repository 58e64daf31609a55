"""Exception types shared across the package."""


class CircleConjugacyError(Exception):
    """Base class; CLI maps subclasses to exit codes via ``exit_code``."""

    exit_code = 2


class InputError(CircleConjugacyError):
    exit_code = 4


class TwoSidedAtBreakpoint(CircleConjugacyError):
    pass


class NoConvergence(CircleConjugacyError):
    pass


class NotBracketed(InputError):
    pass


class RationalTarget(InputError):
    pass


class TieBreak(CircleConjugacyError):
    pass


class NearCollision(CircleConjugacyError):
    pass


class LengthMismatch(InputError):
    pass


class NotAdaptedError(CircleConjugacyError):
    def __init__(self, reason):
        super().__init__(f"segment not adapted: {reason}")
        self.reason = reason


class RatioMismatch(CircleConjugacyError):
    pass


class OrderMismatch(CircleConjugacyError):
    pass


class CertificateFailed(CircleConjugacyError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class WindowsOverlap(CircleConjugacyError):
    pass


class PreconditionFailed(CircleConjugacyError):
    pass


class EpsTooLarge(InputError):
    pass


class Infeasible(CircleConjugacyError):
    exit_code = 3

    def __init__(self, message, needed_w=None):
        super().__init__(message)
        self.needed_w = needed_w


class ImageMismatch(CircleConjugacyError):
    pass


class IteratesOverlap(CircleConjugacyError):
    pass


class MassOverflow(InputError):
    pass


class TailNotSmall(CircleConjugacyError):
    pass


class NotWandering(CircleConjugacyError):
    pass


class InfeasibleProfile(CircleConjugacyError):
    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class NoWanderingDetected(CircleConjugacyError):
    pass


class RotationMismatch(InputError):
    pass


class BudgetExhausted(CircleConjugacyError):
    exit_code = 3

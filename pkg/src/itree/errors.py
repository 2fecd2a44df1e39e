"""Exception types raised across the package."""


class ItreeError(Exception):
    """Base class for all package errors."""


class OutOfRange(ItreeError, ValueError):
    pass


class LengthMismatch(ItreeError, ValueError):
    pass


class NotDecouplable(ItreeError):
    """Off-diagonal amplitudes are not symmetric, so no basis rotation decouples the step."""


class InconsistentAmplitudes(ItreeError):
    """The left and right move equations admit no common rotation angle."""


class DegenerateDenominator(ItreeError, ZeroDivisionError):
    pass


class TooLarge(ItreeError):
    """Requested problem size exceeds the guard rail of an exponential-cost routine."""


class UnsupportedGate(ItreeError):
    pass


class DegenerateBranch(ItreeError):
    pass


class EmptyStream(ItreeError, ValueError):
    pass


class KeyMismatch(ItreeError, ValueError):
    pass


class InsufficientExpected(ItreeError, ValueError):
    pass

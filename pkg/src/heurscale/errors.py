"""Exception hierarchy shared by every module of the package."""


class HeurscaleError(Exception):
    """Base class for all package errors."""


class InvalidStateError(HeurscaleError, ValueError):
    pass


class UnsolvableError(HeurscaleError):
    pass


class ResourceLimitError(HeurscaleError):
    pass


class SizeLimitError(HeurscaleError):
    pass


class FormatError(HeurscaleError):
    pass


class ShapeMismatchError(HeurscaleError, ValueError):
    pass


class NondifferentiableLossError(HeurscaleError):
    pass


class EmptyInputError(HeurscaleError, ValueError):
    pass


class LabelOffGridError(HeurscaleError, ValueError):
    pass


class ZeroLabelError(HeurscaleError, ValueError):
    pass


class DivergedError(HeurscaleError):
    pass


class NoFitError(HeurscaleError):
    pass

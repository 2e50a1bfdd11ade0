class HyroError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(HyroError, ValueError):
    pass


class BoundaryError(HyroError, ValueError):
    pass


class UndefinedAngleError(HyroError, ValueError):
    pass


class ShapeError(HyroError, ValueError):
    pass


class DegenerateEmbeddingError(HyroError, ValueError):
    pass


class ConfigError(HyroError, ValueError):
    pass


class FormatError(HyroError, ValueError):
    """Malformed or incompatible parameter / report file."""


class DivergenceError(HyroError, RuntimeError):
    """Training produced a non-finite loss or gradient.

    ``log`` holds the records collected before the failure.
    """

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log

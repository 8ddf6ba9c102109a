"""Exception hierarchy shared by the library and the CLI."""


class RandsetError(Exception):
    """Base class for all errors raised by randset."""


class DecodeError(RandsetError, ValueError):
    """Malformed image file; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnsupportedFormatError(RandsetError, ValueError):
    pass


class InvalidParameterError(RandsetError, ValueError):
    pass


class ShapeError(RandsetError, ValueError):
    """Samples with incompatible lengths were combined."""


class InsufficientDataError(RandsetError, ValueError):
    """Too few samples or components to run the requested computation."""


class EmptySampleError(InsufficientDataError):
    pass


class TooFewComponentsError(InsufficientDataError):
    pass


class PoolTooSmallError(InsufficientDataError):
    def __init__(self, pool, size, k):
        super().__init__(f"pool {pool!r} holds {size} descriptors, fewer than k={k}")
        self.pool = pool

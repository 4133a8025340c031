"""Exception types shared across the package."""


class ImageIOError(OSError):
    """A PNG could not be read or written."""


class EstimationError(ValueError):
    """An illuminant could not be estimated from the given pixels."""

"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Input dimensions are incompatible with a kernel spec or model."""


class DataFormatError(ValueError):
    """A dataset file is malformed; the message carries the line number."""


class NumericalError(RuntimeError):
    """A linear solve or sampling step failed beyond recoverable tolerance."""

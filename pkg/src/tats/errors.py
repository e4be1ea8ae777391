"""Exception types raised across the package.

Each error names the contract it enforces; callers can catch the narrow
class or the shared :class:`TatsError` base.
"""


class TatsError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(TatsError, ValueError):
    """Input violates a documented precondition."""


class TooShort(ValidationError):
    """Sequence shorter than the operation requires."""


class SegmentTooShort(ValidationError):
    """Split segment cannot hold a single window."""


class BadRatios(ValidationError):
    """Split ratios are not positive or do not sum to one."""


class ShapeMismatch(ValidationError):
    """Array shapes disagree with the declared contract."""


class DegenerateEmbeddings(ValidationError):
    """All mean-centered embedding rows are zero."""


class ZeroSpectrum(ValidationError):
    """Spectrum has no amplitude mass to normalize."""


class TooLarge(ValidationError):
    """Problem size exceeds the exact solver's cap."""


class BadMagic(ValidationError):
    """Embedding file does not start with the expected magic bytes."""


class TruncatedPayload(ValidationError):
    """Embedding file payload is shorter than its header claims."""


class NonFinite(ValidationError):
    """Data contains NaN or infinite entries."""


class EmptyText(ValidationError):
    """Token pooling received zero token vectors."""


class BadKernel(ValidationError):
    """Moving-average kernel is even, non-positive, or wider than the window."""


class EmptyTrainSet(ValidationError):
    """Training requires at least one window."""


class AllMasked(ValidationError):
    """A variable has no observed entries inside the window."""


class EmptySelection(ValidationError):
    """Metric mask selects no cells."""


class MissingColumn(ValidationError):
    """Requested CSV column is absent."""


class ParseError(ValidationError):
    """CSV cell failed to parse; carries 1-based row and column."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class NotFittedError(TatsError, RuntimeError):
    """Estimator method requires a prior call to ``fit``."""

"""Exception types shared across the package."""


class FieldLabError(Exception):
    """Base class for all package-specific errors."""


class QuadratureError(FieldLabError):
    """Adaptive quadrature failed to converge within the allowed refinements.

    Carries the last (partial) estimate so callers can inspect how far the
    refinement got before giving up.
    """

    def __init__(self, message, partial_estimate=None):
        super().__init__(message)
        self.partial_estimate = partial_estimate


class LatticeResolutionError(FieldLabError):
    """The requested momentum cutoff is too large for the lattice spacing."""


class CatalogError(FieldLabError):
    """Unknown interaction name or invalid catalog parameters."""


class MissingLimitError(FieldLabError):
    """The interaction does not declare a boundary limit the caller needs."""


class NotPositiveDefiniteError(FieldLabError):
    """An overlap matrix failed its positive-definiteness check."""


class SourceSupportError(FieldLabError):
    """A source field does not satisfy a declared-support precondition."""


class TwoPointUndefinedError(FieldLabError):
    """The connected two-point function is not produced by this functional."""

"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class so
tests and the CLI can map errors to exit codes without string matching.
"""


class SparseGlauberError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(SparseGlauberError, ValueError):
    """A parameter is outside its documented domain."""


class EnumerationOverflowError(SparseGlauberError):
    """An exact enumeration exceeded its configured cap."""


class EmptySupportError(SparseGlauberError):
    """A pinning is inconsistent with every positive-weight configuration."""


class ComponentTooComplexError(SparseGlauberError):
    """A component's tree-excess exceeds the dynamic-programming cap."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class DegenerateInstanceError(SparseGlauberError):
    """The update-site set is empty; the chain has nothing to resample."""


class UndefinedInfluenceError(SparseGlauberError):
    """Influence of a site whose conditional marginal is deterministic."""


class NumericFailureError(SparseGlauberError):
    """An iterative numeric routine failed to converge."""

"""Exception types shared across the package."""


class SvdkfError(Exception):
    """Base class for all package errors."""


class InvalidInput(SvdkfError):
    """Raised when an argument violates an operation's preconditions."""


class InvalidModel(SvdkfError):
    """Raised when state-space model matrices are inconsistent or not PSD."""


class NotPositiveSemidefinite(SvdkfError):
    """Raised when a Cholesky pivot falls below the negative tolerance."""


class FactorizationFailure(SvdkfError):
    """Raised when a matrix factorization backend fails to converge."""


class FilterFailed(SvdkfError):
    """Raised when stepping a filter that has entered terminal failed status."""

"""Exception types shared across the package."""


class MialabError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(MialabError):
    """Invalid parameters, shapes, normalization, or file schemas."""


class DataError(MialabError):
    """Input data that cannot be processed (non-finite values, wrong domain)."""


class DegenerateDataError(DataError):
    """Training data lacking the structure a fit requires (e.g. one class)."""


class InsufficientDataError(DataError):
    """Too few samples for the requested computation."""


class UnboundedRatioError(MialabError):
    """No finite likelihood-ratio bounds exist for the given pair."""

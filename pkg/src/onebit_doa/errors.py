"""Exception types raised by the estimation pipeline."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """Inconsistent dimensions or scenario settings."""


class EmptySelectionError(RuntimeError):
    """No column of the estimate carries energy; estimation failed."""


class DegenerateGeometryError(RuntimeError):
    """Estimated DoAs are too close for the steering matrix to be inverted."""

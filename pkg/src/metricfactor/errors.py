"""Exception types shared across the package."""


class MetricFactorError(Exception):
    """Base class for all package errors."""


class StructuralError(MetricFactorError, ValueError):
    """Shapes, label sets or maps do not line up."""


class DomainError(MetricFactorError, ValueError):
    """An argument is outside the domain of the operation."""


class CapacityError(MetricFactorError):
    """An exact search was requested on an instance that is too large."""

"""Exception types shared across the package."""


class LongevityHedgeError(Exception):
    """Base class for all package errors."""


class ValidationError(LongevityHedgeError, ValueError):
    """A parameter or input violates a model precondition."""


class NumericsError(LongevityHedgeError, RuntimeError):
    """A numerical contract failed (pole, truncation bound, underflow, ...)."""

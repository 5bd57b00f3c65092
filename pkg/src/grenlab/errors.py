"""Exception types raised across the package."""


class InputError(ValueError):
    """Malformed input: ordering, finiteness, shape or length mismatch."""


class DomainError(ValueError):
    """Evaluation point outside the region where an object is defined."""


class ModelError(ValueError):
    """Model specification violates its assumptions, or data cannot support it."""


class FitError(ValueError):
    """A rate fit cannot be computed from the supplied table."""

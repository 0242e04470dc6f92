"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes of two inputs that must be aligned do not match."""


class NotPSDError(ValueError):
    """A matrix required to be positive semidefinite has a genuinely negative eigenvalue."""

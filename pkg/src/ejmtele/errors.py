"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the range an operation is defined on."""


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NotUnitaryError(ValueError):
    """An operation that requires a unitary matrix received something else."""

"""Exception types shared across modules."""


class InvalidSectorError(ValueError):
    """(loops, legs) is not realizable for the given vertex degree k, or the
    corresponding normalization constant is not positive."""


class NonGenericDimensionError(ArithmeticError):
    """A divergence-degree denominator vanished at this dimension.

    Carries `subject`: the offending graph, grid cell, or series monomial.
    """

    def __init__(self, message: str, subject=None):
        super().__init__(message)
        self.subject = subject


class TableFormatError(ValueError):
    """Coefficient-table file is malformed or does not match the request."""

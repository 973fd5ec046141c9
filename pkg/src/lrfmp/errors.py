"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class SeriesTruncationError(RuntimeError):
    """A truncated series hit its term cap before the stopping rule fired."""


class DegenerateElementError(ArithmeticError):
    """A dictionary element has (numerically) vanishing objective denominator."""

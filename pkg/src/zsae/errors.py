"""Exception types shared across the package.

The CLI maps these onto stable exit codes: ValidationError -> 1,
OSError -> 2, DegenerateEmbeddingError / NumericalError -> 3.
"""


class ValidationError(ValueError):
    """Invalid data, configuration, split, or file content."""


class DegenerateEmbeddingError(ArithmeticError):
    """An embedding collapsed to (near-)zero norm and cannot be normalized.

    Usually indicates a degenerate projection matrix; surfaced instead of
    silently returning garbage directions.
    """


class NumericalError(ArithmeticError):
    """A numerical quantity (loss, gradient, weight) became non-finite."""

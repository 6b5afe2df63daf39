"""Exception types shared across the package.

The CLI maps these onto exit codes: FormError -> 2, DomainError -> 3,
CacheError -> 4.
"""


class FormError(ValueError):
    """Invalid quadratic form, flag or shape (bad input, not bad numerics)."""


class DomainError(ArithmeticError):
    """Request outside an evaluator's validity envelope, or too close to a pole/zero."""


class CacheError(OSError):
    """Value-list cache is missing, locked, short or corrupt."""

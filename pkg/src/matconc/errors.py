"""Shared exception types."""


class ValidationError(ValueError):
    """An input failed a structural or numerical precondition."""


class NumericError(ArithmeticError):
    """A computation failed numerically: overflow, a lost root bracket, or
    an imaginary residue above tolerance."""

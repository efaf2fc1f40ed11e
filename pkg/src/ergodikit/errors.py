"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a structural or probabilistic invariant."""


class ConvergenceError(ArithmeticError):
    """An iterative numerical routine failed to reach its tolerance."""

class NonFiniteError(RuntimeError):
    """A computation produced NaN or infinity where finite values are required."""

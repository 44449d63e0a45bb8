"""Exception types shared by the library and the command line driver."""


class ConfigurationError(ValueError):
    """Invalid or inconsistent run parameters."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values or failed to bracket a root."""


class ConvergenceError(RuntimeError):
    """An iteration ran out of its step budget."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual

"""Exception types shared across the package.

The CLI maps these onto exit codes (2 config, 3 data, 4 numerical).
"""


class ConfigError(ValueError):
    """Invalid feature/training/run configuration."""


class DataError(ValueError):
    """Unreadable, malformed or inconsistent input data."""


class NumericalError(ArithmeticError):
    """A linear-algebra step produced non-finite values or failed to solve."""

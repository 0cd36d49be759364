"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad configuration: unknown key, invalid value, impossible combination."""


class DataError(ValueError):
    """Bad input data (parse failures, protocol violations)."""


class ParseError(DataError):
    """Malformed input line; message carries the line number."""


class NumericError(ArithmeticError):
    """Non-finite value encountered during training."""

"""Exception types shared across the package."""


class CfxError(Exception):
    """Base class for all package-specific errors."""


class ParseError(CfxError):
    """Raised for malformed input lines; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ConfigError(CfxError):
    """Raised for invalid configuration values or unknown identifiers."""


class EmptyDatasetError(CfxError):
    """Raised when preprocessing filters away every interaction."""


class TrainingError(CfxError):
    """Raised when training diverges; carries the offending epoch."""

    def __init__(self, message: str, epoch: int):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


class NumericError(CfxError):
    """Raised when a computation produces non-finite values."""

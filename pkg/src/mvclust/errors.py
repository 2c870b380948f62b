"""Exception hierarchy shared across the package."""


class MvclustError(Exception):
    """Base class for all package errors."""


class ConfigError(MvclustError):
    """Invalid or incomplete experiment configuration."""


class DataError(MvclustError):
    """Dataset files missing, malformed, or mutually inconsistent."""


class ShapeError(MvclustError):
    """Array dimensions do not match what an operation requires."""


class NumericalError(MvclustError):
    """Non-finite values or degenerate geometry encountered."""

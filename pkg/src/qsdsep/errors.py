"""Exception types shared across the package."""


class Error(Exception):
    """Base class for errors raised by this package."""


class ConfigError(Error, ValueError):
    """Invalid configuration, arguments, or input data."""


class NumericsError(Error, RuntimeError):
    """A numerical routine failed or left its validity domain."""

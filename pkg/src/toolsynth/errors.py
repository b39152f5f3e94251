"""Exception types shared across the engine.

The CLI maps these onto exit codes: ConfigError -> 1, DataIOError -> 2,
InvariantError (and plain ValueError) -> 3.
"""


class ConfigError(ValueError):
    """Bad usage or configuration: unknown keys, missing seed, invalid recipe."""


class DataIOError(OSError):
    """A file could not be read, decoded, or written."""


class InvariantError(ValueError):
    """A contract of the engine was violated (dimension mismatch, bad kind, ...)."""

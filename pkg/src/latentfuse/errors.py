"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes (see cli.EXIT_CODES), so every
error raised by library code should derive from one of the three bases:
usage/configuration problems, bad input data, or numeric failures.
"""


class UsageError(ValueError):
    """Invalid arguments, configuration keys, or parameter combinations."""


class DataError(RuntimeError):
    """Malformed or inconsistent input data (files, streams, datasets)."""


class NumericError(ArithmeticError):
    """Non-finite values or numerically impossible states during compute."""


class BadMagicError(DataError):
    """A binary file does not start with the expected magic bytes."""


class VersionError(DataError):
    """A binary file carries an unsupported format version."""


class TruncatedPayloadError(DataError):
    """A binary file ends before a declared payload is complete."""

"""Common exception base for the framework.

Every module defines its own exception types next to the code that raises
them; they all derive from :class:`FastIIoTError` so callers can catch
framework errors wholesale (the CLI maps them to exit code 1).
"""


class FastIIoTError(Exception):
    """Base class for all errors raised by fastiiot."""

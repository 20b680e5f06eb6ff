"""Exception types shared across the package.

Everything raised for bad *data* derives from :class:`DataError` so the CLI can
map it to exit code 2; programming/usage mistakes stay as ``ValueError``/``TypeError``.
"""


class HexposomeError(Exception):
    pass


class DataError(HexposomeError, ValueError):
    """Input data violates a contract (malformed file, bad value, ...)."""


class FormatError(DataError):
    """A file could not be parsed. ``location`` names the line or feature."""

    def __init__(self, message, location=None):
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location


class GridMismatchError(DataError):
    def __init__(self, expected, found):
        super().__init__(f"grid fingerprint mismatch: expected [{expected}], found [{found}]")
        self.expected = expected
        self.found = found


class DuplicateKeyError(DataError):
    pass


class NotComputable(HexposomeError):
    """Raised when a score has no defined value for the given labelling."""

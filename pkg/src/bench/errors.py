from typing import Optional


class BenchError(Exception):
    """Base class for harness failures."""


class ConfigError(BenchError):
    """A benchmark configuration is missing, malformed or inconsistent."""


class DataFormatError(BenchError):
    """
    A data file does not follow its declared binary format.

    ``offset`` is the byte position where parsing failed, when known.
    """

    def __init__(self, message: str, offset: Optional[int] = None) -> None:
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)

"""Exception hierarchy.

``ValidationError`` subclasses map to CLI exit code 1, ``TransportError``
to exit code 2.
"""

from __future__ import annotations


class DualHypError(Exception):
    """Base class for all package errors."""


class ValidationError(DualHypError, ValueError):
    pass


class EmptyReference(ValidationError):
    def __init__(self, message: str = "reference has no tokens") -> None:
        super().__init__(message)


class EmptyList(ValidationError):
    def __init__(self, message: str = "hypothesis list is empty") -> None:
        super().__init__(message)


class LengthMismatch(ValidationError):
    pass


class InvalidShape(ValidationError):
    pass


class InvalidDuration(ValidationError):
    pass


class DegenerateWindow(ValidationError):
    pass


class FrameCountMismatch(ValidationError):
    pass


class DegenerateLabels(ValidationError):
    pass


class NonFiniteFeature(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class MissingMasks(ValidationError):
    pass


class EmptyAnswer(ValidationError):
    pass


class UnknownBaseline(ValidationError):
    pass


class MissingSnr(ValidationError):
    pass


class ParseError(ValidationError):
    """Dataset line that fails schema validation."""

    def __init__(self, line: int, field: str, message: str) -> None:
        self.line = line
        self.field = field
        super().__init__(f"line {line}: {field}: {message}")


class DuplicateId(ParseError):
    def __init__(self, line: int, record_id: str) -> None:
        super().__init__(line, "id", f"duplicate record id {record_id!r}")


class SchemaVersionUnsupported(ParseError):
    def __init__(self, line: int, version: object) -> None:
        super().__init__(line, "schema_version", f"unsupported schema version {version!r}")


class RecordError(ValidationError):
    """Wraps a per-record failure with the record id attached."""

    def __init__(self, record_id: str, cause: Exception) -> None:
        self.record_id = record_id
        self.cause = cause
        super().__init__(f"record {record_id}: {cause}")


class CorrectorError(DualHypError):
    pass


class TransportError(CorrectorError):
    pass


class MalformedResponse(CorrectorError):
    pass


class AuthMissing(CorrectorError):
    pass


class IoFailure(DualHypError, OSError):
    pass

"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class AnalyticsError(Exception):
    """Base class for every error raised by lo_analytics."""


class MalformedDocument(AnalyticsError):
    pass


class StructuralError(AnalyticsError):
    def __init__(self, message: str, module_id: str | None = None):
        super().__init__(message)
        self.module_id = module_id


class UnknownModule(AnalyticsError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class NoWeek(AnalyticsError):
    pass


class UnsortedInput(AnalyticsError):
    pass


class DuplicateCode(AnalyticsError):
    def __init__(self, code: str, line_no: int):
        super().__init__(f"line {line_no}: duplicate learning objective code {code!r}")
        self.code = code
        self.line_no = line_no


class MalformedRow(AnalyticsError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TagError(AnalyticsError):
    """No usable tag rows survived validation."""


class DegenerateInput(AnalyticsError, ValueError):
    pass


class EmptyInput(AnalyticsError, ValueError):
    pass


class SpecError(AnalyticsError, ValueError):
    pass


class InputIoError(AnalyticsError, OSError):
    def __init__(self, path, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)

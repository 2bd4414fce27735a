"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SnmpCepError(Exception):
    """Base class for every error raised by snmpcep."""


class UnknownMeasureError(SnmpCepError, ValueError):
    def __init__(self, measure: str):
        self.measure = measure
        super().__init__(f"unknown measure {measure!r}")


class EventError(SnmpCepError, ValueError):
    """Invalid event construction or arithmetic over events."""


class PatternError(SnmpCepError):
    """A pattern failed to tokenize, parse or validate.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class PatternSyntaxError(PatternError):
    def __init__(self, message, line=None, column=None, expected=()):
        self.expected = tuple(expected)
        if self.expected:
            message = f"{message} (expected {', '.join(self.expected)})"
        super().__init__(message, line, column)


class PatternValidationError(PatternError):
    def __init__(self, message: str, literal: str | None = None, line: int | None = None,
                 column: int | None = None):
        self.literal = literal
        super().__init__(message, line, column)


class OutOfOrderError(SnmpCepError, ValueError):
    def __init__(self, now_ms: int, ts_ms: int):
        self.now_ms = now_ms
        self.ts_ms = ts_ms
        super().__init__(f"event at {ts_ms} ms precedes engine clock {now_ms} ms")


class RegistrationError(SnmpCepError, ValueError):
    pass


class TraceFormatError(SnmpCepError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ScenarioError(SnmpCepError, ValueError):
    pass


class SnmpError(SnmpCepError):
    """SNMP transport or protocol failure."""


class SnmpTimeout(SnmpError):
    """No response within the configured timeout and retries (retriable)."""


class SnmpAuthError(SnmpError):
    pass


class PollerError(SnmpError):
    """The poller gave up after too many consecutive failed cycles."""


class ReportError(SnmpCepError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

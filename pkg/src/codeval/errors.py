"""Harness error taxonomy. Each error maps to a named failure mode in the
operation contracts; none of them derive from each other except where a
caller legitimately handles them as a group."""

from __future__ import annotations


class CodevalError(Exception):
    """Base class for all harness errors."""


class UnsupportedLanguage(CodevalError):
    pass


class RecipeNotFound(CodevalError):
    pass


class ProbeFailure(CodevalError):
    pass


class BuildFailure(CodevalError):
    pass


class AnalyzerUnavailable(CodevalError):
    pass


class CoverageUnavailable(CodevalError):
    pass


class SchemaViolation(CodevalError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ContextTooLarge(CodevalError):
    pass


class ReplayMiss(CodevalError):
    pass


class HttpError(CodevalError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class AnchorNotFound(CodevalError):
    pass


class EmptyInput(CodevalError):
    pass


class ConfigError(CodevalError):
    pass

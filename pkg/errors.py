"""Exception hierarchy shared by every module of the toolkit.

Checks never raise for violations: they return CheckReport values. The
exceptions below are reserved for misuse of an operation (a failed
precondition, malformed input, a program that cannot continue).
"""
from typing import Any, Optional


class ToolkitError(Exception):
    pass


class MemoryPermissionError(ToolkitError):
    # Named so it does not shadow the builtin PermissionError.
    def __init__(self, operation: str, block: int, offset: int, needed: str) -> None:
        super().__init__(f"{operation} at ({block},{offset}) needs {needed} permission")
        self.operation = operation
        self.block = block
        self.offset = offset
        self.needed = needed


class PreconditionError(ToolkitError):
    def __init__(self, message: str, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


class LinkError(ToolkitError):
    pass


class QueryRejected(ToolkitError):
    pass


class StuckError(ToolkitError):
    def __init__(self, message: str, state: Any = None, trace: Any = None) -> None:
        super().__init__(message)
        self.state = state
        self.trace = trace


class FuelExhausted(ToolkitError):
    def __init__(self, message: str, trace: Any = None) -> None:
        super().__init__(message)
        self.trace = trace


class ParseError(ToolkitError):
    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class CompileError(ToolkitError):
    pass


class TypeMismatch(ToolkitError):
    pass


class PatternMismatch(ToolkitError):
    def __init__(self, message: str, step: Optional[int] = None) -> None:
        prefix = f"step {step}: " if step is not None else ""
        super().__init__(prefix + message)
        self.step = step


class UnsupportedLaw(ToolkitError):
    pass


class UnsupportedPair(ToolkitError):
    pass


class UnsupportedConvention(ToolkitError):
    pass


class UnknownSpec(ToolkitError):
    pass


class UnknownScenario(ToolkitError):
    pass


class ConfigError(ToolkitError):
    pass

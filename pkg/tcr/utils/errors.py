"""Exception hierarchy for the toolkit.

Everything raised on purpose derives from `TcrError`, itself a `ValueError`, so
callers that only care about "bad input" can keep catching `ValueError`.
"""

from typing import Any


class TcrError(ValueError):
    pass


class ExtendedArithmeticError(TcrError):
    pass


class NotImplementableError(TcrError):
    pass


class AgentMismatchError(TcrError):
    pass


class InvalidContextError(TcrError):
    def __init__(self, message: str, diagnostics: list[Any] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class ScheduleViolationError(TcrError):
    pass


class CapExceededError(TcrError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"enumeration reached {count} runs, cap is {cap}")
        self.count = count
        self.cap = cap


class EventNotInRunError(TcrError):
    pass


class TriggerAbsentError(TcrError):
    pass


class InvalidPathError(TcrError):
    pass


class GroupOverlapError(TcrError):
    pass


class NotSolvableError(TcrError):
    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class BudgetInsufficientError(TcrError):
    pass


class PreconditionViolatedError(TcrError):
    def __init__(self, reasons: list[str]):
        super().__init__("; ".join(reasons))
        self.reasons = reasons


class SpaceMismatchError(TcrError):
    pass


class DeltaNegInfError(TcrError):
    pass


class FixedPointMismatchError(TcrError):
    pass


class ScenarioParseError(TcrError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        location = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{location}{message}")
        self.line = line
        self.column = column


class ScenarioValidationError(TcrError):
    def __init__(self, diagnostics: list[Any]):
        lines = [getattr(d, "message", str(d)) for d in diagnostics]
        super().__init__("scenario failed validation:\n" + "\n".join(f"  {x}" for x in lines))
        self.diagnostics = diagnostics


class CommandArgumentError(TcrError):
    """A command-line value that does not fit the loaded scenario."""

"""
Exception hierarchy shared by every codedmrpt module.

Configuration and data problems subclass `ValueError` so callers that follow the
usual "catch ValueError on bad input" convention keep working; failures that
only show up while a query runs subclass `RuntimeError`.
"""

from __future__ import annotations


class CodedMRPTError(Exception):
    pass


class ConfigError(CodedMRPTError, ValueError):
    pass


class DataError(CodedMRPTError, ValueError):
    pass


class DimensionMismatchError(CodedMRPTError, ValueError):
    pass


class InconsistentDistanceError(CodedMRPTError, ArithmeticError):
    pass


class DecodeError(CodedMRPTError, RuntimeError):
    pass


class InsufficientResultsError(DecodeError):
    # Fewer results than the recovery threshold: the collector has to keep waiting.
    def __init__(self, received: int, required: int) -> None:
        super().__init__(f"insufficient worker results: received {received}, need {required}")
        self.received = received
        self.required = required


class DuplicateBetaError(DecodeError):
    pass


class BetaMismatchError(DecodeError):
    pass


class IllConditionedError(DecodeError):
    def __init__(self, condition: float, limit: float) -> None:
        super().__init__(f"Vandermonde system too ill-conditioned: cond={condition:.3e} > {limit:.3e}")
        self.condition = condition
        self.limit = limit


class QueryTimeoutError(CodedMRPTError, RuntimeError):
    pass


class StageError(CodedMRPTError):
    """A runner stage failed; `cause` keeps the original exception for exit-code mapping."""

    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause

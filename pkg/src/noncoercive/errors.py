"""Structured error types.

Every error carries a short stable ``code`` so reports and the CLI can
surface it without string matching.
"""

from __future__ import annotations


class NoncoerciveError(Exception):
    code = "E000"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict:
        return {"code": self.code, "type": type(self).__name__,
                "message": self.message,
                "context": {k: repr(v) for k, v in sorted(self.context.items())}}


class DimensionMismatchError(NoncoerciveError, ValueError):
    code = "E010"


class InvalidParameterError(NoncoerciveError, ValueError):
    code = "E011"


class ExtendedRealFault(NoncoerciveError, ArithmeticError):
    """An undefined extended-real combination such as (+inf) + (-inf)."""

    code = "E012"


class ImproperFunctionError(NoncoerciveError, ValueError):
    code = "E013"


class EvaluationError(NoncoerciveError, ArithmeticError):
    code = "E014"


class NotConvexError(NoncoerciveError, ValueError):
    code = "E020"


class BaseNotInSetError(NoncoerciveError, ValueError):
    code = "E021"


class MissingAnnotationError(NoncoerciveError, ValueError):
    code = "E022"


class EmptyScheduleError(NoncoerciveError, ValueError):
    code = "E023"


class EmptyGridError(NoncoerciveError, ValueError):
    code = "E030"


class EmptyStageError(NoncoerciveError, RuntimeError):
    """The truncated problem has no grid solution at some stage."""

    code = "E031"


class EmptySampleError(NoncoerciveError, ValueError):
    code = "E032"


PARSE_CODES = {
    "E100": "syntax error",
    "E101": "unknown identifier",
    "E102": "arity mismatch",
    "E103": "dimension mismatch",
    "E104": "malformed piecewise",
    "E105": "unknown or missing section or key",
    "E106": "bad header",
    "E107": "type mismatch",
    "E108": "duplicate declaration",
    "E109": "bad value",
}


class ParseError(NoncoerciveError, ValueError):
    """Problem-file or expression diagnostic with a position.

    ``line`` and ``column`` are 1-based; ``expected`` lists acceptable tokens
    for syntax errors.
    """

    def __init__(self, code: str, message: str, line: int = 0, column: int = 0,
                 expected: tuple[str, ...] = ()):
        if code not in PARSE_CODES:
            raise ValueError(f"unknown diagnostic code {code}")
        super().__init__(message)
        self.code = code
        self.line = line
        self.column = column
        self.expected = tuple(expected)

    def to_dict(self) -> dict:
        return {"code": self.code, "type": type(self).__name__, "kind": PARSE_CODES[self.code],
                "message": self.message, "line": self.line, "column": self.column,
                "expected": list(self.expected)}

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}" if self.line else f"col {self.column}"
        exp = f" (expected {', '.join(self.expected)})" if self.expected else ""
        return f"{self.code} at {where}: {self.message}{exp}"

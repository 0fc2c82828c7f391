"""Runtime error taxonomy for the evaluator.

Every kind maps to the runtime-error classification downstream; the kind
itself is kept for diagnostics and tests.
"""

from __future__ import annotations


class EvalError(Exception):
    DIVISION_BY_ZERO = "DivisionByZero"
    BAD_ARG_COUNT = "BadArgCount"
    BAD_ARG_TYPE = "BadArgType"
    NON_GROUND_RESULT = "NonGroundResult"
    LIMIT_EXCEEDED = "LimitExceeded"
    UNKNOWN_OPERATION = "UnknownOperation"

    def __init__(self, kind: str, message: str, location=None, limit: str | None = None):
        where = f" in {location}" if location else ""
        super().__init__(f"{kind}: {message}{where}")
        self.kind = kind
        self.message = message
        self.location = location  # SourceSpan or head name, when known
        self.limit = limit  # which limit, for LIMIT_EXCEEDED


DIVISION_BY_ZERO = EvalError.DIVISION_BY_ZERO
BAD_ARG_COUNT = EvalError.BAD_ARG_COUNT
BAD_ARG_TYPE = EvalError.BAD_ARG_TYPE
NON_GROUND_RESULT = EvalError.NON_GROUND_RESULT
LIMIT_EXCEEDED = EvalError.LIMIT_EXCEEDED
UNKNOWN_OPERATION = EvalError.UNKNOWN_OPERATION

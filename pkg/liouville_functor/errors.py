"""Exception types raised by the library; the CLI maps them to exit codes."""

from fractions import Fraction
from typing import Any


class FunctorError(Exception):
    """Base class. ``detail`` holds structured data for JSON error payloads."""

    def __init__(self, message: str, **detail: Any):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def payload(self) -> dict:
        return {
            "type": type(self).__name__,
            "message": self.message,
            "detail": {k: _jsonable(v) for k, v in sorted(self.detail.items())},
        }


class InputError(FunctorError):
    """Malformed input file or parameter (exit status 2)."""


class GraphError(FunctorError):
    pass


class SeriesError(FunctorError):
    pass


class SchottkyError(FunctorError):
    pass


class SingularMatrixError(FunctorError):
    pass


class SingularGramError(SingularMatrixError):
    def __init__(self, level: int, determinant: Fraction):
        super().__init__(
            f"Gram matrix at level {level} is singular (determinant {determinant})",
            level=level,
            determinant=determinant,
        )
        self.level = level
        self.determinant = determinant


class ThreePointSolveError(FunctorError):
    pass


class BlockError(FunctorError):
    pass


class MoveError(FunctorError):
    pass


def _jsonable(value: Any) -> Any:
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return str(value)

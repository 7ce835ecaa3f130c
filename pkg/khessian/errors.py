"""
The MIT License (MIT)

Copyright (c) 2026-present Village

Permission is hereby granted, free of charge, to any person obtaining a
copy of this software and associated documentation files (the "Software"),
to deal in the Software without restriction, including without limitation
the rights to use, copy, modify, merge, publish, distribute, sublicense,
and/or sell copies of the Software, and to permit persons to whom the
Software is furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS
OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
DEALINGS IN THE SOFTWARE.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

__all__ = (
    "KHessianException",
    "KHessianWarning",
    "ArgumentError",
    "PreconditionError",
    "NumericError",
    "ConeViolationError",
    "SolverError",
    "NonConvergenceError",
    "ConstantsError",
    "ConfigError",
    "StateError",
    "InternalError",
)

if TYPE_CHECKING:
    from typing import Any, Optional, Sequence

    from .dirichlet import SolveReport


class KHessianException(Exception):
    ...


class KHessianWarning(UserWarning):
    ...


class ArgumentError(KHessianException, ValueError):
    ...


class PreconditionError(ArgumentError):
    ...


class NumericError(KHessianException):
    def __init__(self, message: str, diagnostics: Optional[Any] = None) -> None:
        super().__init__(message)
        self.diagnostics: Optional[Any] = diagnostics


class ConeViolationError(NumericError):
    def __init__(self, sigma: float, floor: float) -> None:
        super().__init__(
            f"sigma_k = {sigma:.3e} is below the cone floor {floor:.1e}", sigma
        )
        self.sigma: float = sigma
        self.floor: float = floor


class SolverError(KHessianException):
    ...


class NonConvergenceError(SolverError):
    def __init__(self, message: str, report: SolveReport) -> None:
        super().__init__(message)
        self.report: SolveReport = report


class ConstantsError(KHessianException):
    def __init__(self, message: str, **constants: float) -> None:
        super().__init__(message)
        self.constants: dict[str, float] = constants


class ConfigError(KHessianException):
    def __init__(self, path: Sequence[str], message: str) -> None:
        self.path: tuple[str, ...] = tuple(path)
        location = ".".join(self.path) or "<root>"
        super().__init__(f"{location}: {message}")


class StateError(KHessianException):
    ...


class InternalError(KHessianException):
    ...

"""
Error types shared by the RTL frontend.

Every toolkit exception derives from SalvkitError so callers (the verifier,
the pipeline) can tell toolkit failures apart from programming errors.
Frontend errors carry a stable diagnostic code and a source position.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class SalvkitError(Exception):
    """Base class for every error raised by salvkit services."""


@dataclass(frozen=True)
class Diagnostic:
    origin: str
    line: int
    col: int
    code: str
    message: str

    def format(self) -> str:
        return f"{self.origin}:{self.line}:{self.col}: {self.code}: {self.message}"

    def to_json(self) -> dict:
        return {
            "origin": self.origin,
            "line": self.line,
            "col": self.col,
            "code": self.code,
            "message": self.message,
        }


class FrontendError(SalvkitError):
    code = "E000"

    def __init__(
        self,
        message: str,
        *,
        origin: str = "<inline>",
        line: int = 1,
        col: int = 1,
    ):
        super().__init__(message)
        self.message = message
        self.origin = origin
        self.line = line
        self.col = col

    def diagnostic(self) -> Diagnostic:
        return Diagnostic(self.origin, self.line, self.col, self.code, self.message)

    def __str__(self) -> str:
        return self.diagnostic().format()


class VerilogSyntaxError(FrontendError):
    code = "E001"


class UnsupportedConstruct(FrontendError):
    code = "E002"

    def __init__(self, construct: str, message: Optional[str] = None, **kwargs):
        self.construct = construct
        super().__init__(message or f"unsupported construct: {construct}", **kwargs)


class UnresolvedIdentifier(FrontendError):
    code = "E003"

    def __init__(self, name: str, **kwargs):
        self.name = name
        super().__init__(f"unresolved identifier '{name}'", **kwargs)


class WidthOverflow(FrontendError):
    code = "E004"


class MultipleModules(FrontendError):
    code = "E005"


class InvalidEncoding(FrontendError):
    code = "E006"

"""
Normalized Verilog source text and byte spans.

All spans in the toolkit index into SourceText.data, the UTF-8 bytes of the
source after line-ending normalization.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from rtl.services.errors import InvalidEncoding


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end}


@dataclass(frozen=True)
class SourceText:
    data: bytes
    origin: str = "<inline>"
    _line_starts: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        starts = [0]
        starts.extend(i + 1 for i, b in enumerate(self.data) if b == 0x0A)
        object.__setattr__(self, "_line_starts", tuple(starts))

    def __len__(self) -> int:
        return len(self.data)

    @property
    def text(self) -> str:
        return self.data.decode("utf-8")

    @property
    def lexable(self) -> str:
        # One character per byte, so lexer positions are byte offsets.
        return self.data.decode("latin-1")

    def line_col(self, offset: int) -> tuple[int, int]:
        """1-based line and column of a byte offset."""
        line = bisect.bisect_right(self._line_starts, offset) - 1
        return line + 1, offset - self._line_starts[line] + 1

    def span_bytes(self, span: Span) -> bytes:
        if span.end > len(self.data):
            raise ValueError(f"span {span} outside source of length {len(self.data)}")
        return self.data[span.start:span.end]

    def span_text(self, span: Span) -> str:
        return self.span_bytes(span).decode("utf-8")

    @property
    def full_span(self) -> Span:
        return Span(0, len(self.data))


def normalize_source(raw: Union[str, bytes], origin: str = "<inline>") -> SourceText:
    """
    Normalize CRLF and lone CR line endings to LF.

    Accepts text or raw bytes; bytes must be valid UTF-8.
    """
    if isinstance(raw, (bytes, bytearray)):
        try:
            text = bytes(raw).decode("utf-8")
        except UnicodeDecodeError as e:
            raise InvalidEncoding(
                f"source is not valid UTF-8 (byte {e.start})", origin=origin
            ) from e
    else:
        text = raw
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    try:
        data = text.encode("utf-8")
    except UnicodeEncodeError as e:
        raise InvalidEncoding(f"source is not encodable as UTF-8: {e}", origin=origin) from e
    return SourceText(data=data, origin=origin)


def read_source(path: Union[str, Path]) -> SourceText:
    path = Path(path)
    return normalize_source(path.read_bytes(), origin=str(path))

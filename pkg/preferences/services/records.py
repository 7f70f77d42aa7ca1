"""
JSONL preference records.

One pair per line, keys in a fixed order, compact separators and raw UTF-8,
so identical pair lists always produce identical bytes. Mask spans are byte
offsets into the UTF-8 encoding of the y_w / y_l strings of the same record.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import IO, Iterable, Union

from rtl.services.errors import SalvkitError
from rtl.services.source import Span
from preferences.services.pairs import PreferencePair

logger = logging.getLogger(__name__)

RECORD_KEYS = ("prompt_id", "w_id", "l_id", "y_w", "y_l", "contrast", "w_mask", "l_mask", "w_fully_correct")


class SinkFailure(SalvkitError):
    pass


def pair_to_record(pair: PreferencePair) -> dict:
    return {
        "prompt_id": pair.prompt_id,
        "w_id": pair.w_id,
        "l_id": pair.l_id,
        "y_w": pair.y_w,
        "y_l": pair.y_l,
        "contrast": list(pair.contrast),
        "w_mask": [[s.start, s.end] for s in pair.w_mask],
        "l_mask": [[s.start, s.end] for s in pair.l_mask],
        "w_fully_correct": pair.w_fully_correct,
    }


def record_to_pair(record: dict) -> PreferencePair:
    missing = [k for k in RECORD_KEYS if k not in record]
    if missing:
        raise ValueError(f"record is missing {', '.join(missing)}")
    return PreferencePair(
        prompt_id=record["prompt_id"],
        w_id=int(record["w_id"]),
        l_id=int(record["l_id"]),
        y_w=record["y_w"],
        y_l=record["y_l"],
        contrast=tuple(record["contrast"]),
        w_mask=tuple(Span(s, e) for s, e in record["w_mask"]),
        l_mask=tuple(Span(s, e) for s, e in record["l_mask"]),
        w_fully_correct=bool(record["w_fully_correct"]),
    )


def dumps_record(pair: PreferencePair) -> str:
    return json.dumps(pair_to_record(pair), ensure_ascii=False, separators=(",", ":"))


def emit_records(pairs: Iterable[PreferencePair], sink: Union[str, Path, IO[str]]) -> int:
    """Write one line per pair to a path or an open text stream; returns the count."""
    if isinstance(sink, (str, Path)):
        try:
            with open(sink, "w", encoding="utf-8", newline="\n") as f:
                return emit_records(pairs, f)
        except OSError as e:
            raise SinkFailure(f"cannot write {sink}: {e}") from e

    count = 0
    try:
        for pair in pairs:
            sink.write(dumps_record(pair) + "\n")
            count += 1
    except OSError as e:
        raise SinkFailure(f"write failed after {count} record(s): {e}") from e
    return count


def read_records(path: Union[str, Path]) -> list:
    pairs = []
    with open(path, "r", encoding="utf-8", newline="\n") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                pairs.append(record_to_pair(json.loads(line)))
            except (ValueError, TypeError) as e:
                raise ValueError(f"{path}:{lineno}: bad preference record: {e}") from e
    return pairs

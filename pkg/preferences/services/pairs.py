"""
Signal-aware preference pairs.

An ordered candidate pair (w, l) is eligible when some output is correct in
w and incorrect in l; the contrast set is every such output. Each pair
carries byte-span masks over both sources locating the code that implements
the contrast signals (the slices), or the whole module when signal
filtering is off.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from rtl.services.errors import FrontendError, SalvkitError
from rtl.services.parser import parse_module
from rtl.services.siggraph import SliceNotCompilable, UnknownSignal, body_span, build_graph, extract_slice
from rtl.services.source import SourceText, normalize_source
from rtl.services.timing import StageTimer

logger = logging.getLogger(__name__)

MODE_SPELLINGS = {
    "complete": (True, False),
    "partial": (False, True),
    "complete+partial": (True, True),
}


class SliceFailure(SalvkitError):
    pass


@dataclass(frozen=True)
class DatasetMode:
    use_complete_correct: bool = True
    use_partial_correct: bool = True
    filter_incorrect_signals: bool = True

    def __post_init__(self):
        if not (self.use_complete_correct or self.use_partial_correct):
            raise ValueError("dataset mode must admit complete or partial correct samples")

    @classmethod
    def parse(cls, spelling: str, filter_incorrect_signals: bool = True) -> "DatasetMode":
        try:
            complete, partial = MODE_SPELLINGS[spelling]
        except KeyError:
            raise ValueError(
                f"unknown dataset mode '{spelling}' (expected one of {', '.join(MODE_SPELLINGS)})"
            ) from None
        return cls(complete, partial, filter_incorrect_signals)

    @property
    def spelling(self) -> str:
        if self.use_complete_correct and self.use_partial_correct:
            return "complete+partial"
        return "complete" if self.use_complete_correct else "partial"

    def admits(self, w_fully_correct: bool) -> bool:
        return self.use_complete_correct if w_fully_correct else self.use_partial_correct

    def to_json(self) -> dict:
        return {
            "use_complete_correct": self.use_complete_correct,
            "use_partial_correct": self.use_partial_correct,
            "filter_incorrect_signals": self.filter_incorrect_signals,
        }


@dataclass(frozen=True)
class PreferencePair:
    prompt_id: str
    w_id: int
    l_id: int
    y_w: str
    y_l: str
    contrast: tuple  # sorted signal names
    w_mask: tuple  # Spans over y_w's UTF-8 bytes
    l_mask: tuple
    w_fully_correct: bool


def choose_contrast(c_w: Iterable[str], c_l: Iterable[str]) -> frozenset:
    """Maximal contrast set; empty means the ordered pair is ineligible."""
    return frozenset(c_w) - frozenset(c_l)


class _Slices:
    """Per-candidate parse and graph, built once per prompt and reused."""

    def __init__(self, sources: list, timer: StageTimer):
        self.sources = sources
        self.timer = timer
        self.modules = {}

    def module(self, index: int):
        if index not in self.modules:
            try:
                with self.timer.stage("parse"):
                    module = parse_module(self.sources[index])
                with self.timer.stage("graph+slice", samples=0):
                    graph = build_graph(module)
                self.modules[index] = (module, graph)
            except FrontendError as e:
                self.modules[index] = e
        entry = self.modules[index]
        if isinstance(entry, Exception):
            raise SliceFailure(f"candidate {index} does not parse: {entry}") from entry
        return entry

    def spans(self, index: int, contrast: frozenset) -> tuple:
        module, graph = self.module(index)
        try:
            with self.timer.stage("graph+slice"):
                return extract_slice(module, graph, sorted(contrast)).spans
        except (UnknownSignal, SliceNotCompilable) as e:
            raise SliceFailure(f"candidate {index}: cannot slice {sorted(contrast)}: {e}") from e

    def body(self, index: int) -> tuple:
        try:
            module, _ = self.module(index)
        except SliceFailure:
            return (self.sources[index].full_span,)
        return (body_span(module),)


def build_pairs(
    reports: list,
    sources: list,
    mode: DatasetMode = DatasetMode(),
    cap: Optional[int] = None,
    *,
    prompt_id: str = "",
    outputs: Optional[Iterable[str]] = None,
    timer: Optional[StageTimer] = None,
) -> list:
    """
    Enumerate ordered pairs (i, j), i != j, in index order and keep the
    eligible ones the mode admits, stopping after `cap` pairs.

    `outputs` is the reference output set used to decide full correctness;
    it defaults to the signals the reports carry verdicts for.
    """
    if len(reports) != len(sources):
        raise ValueError(f"{len(reports)} reports but {len(sources)} sources")
    if cap is not None and cap < 1:
        raise ValueError(f"pair cap must be at least 1, got {cap}")
    sources = [s if isinstance(s, SourceText) else normalize_source(s) for s in sources]
    timer = timer if timer is not None else StageTimer()
    if outputs is None:
        outputs = {sig for r in reports for sig in r.signals}
    outputs = frozenset(outputs)
    slices = _Slices(sources, timer)

    pairs = []
    for i, w in enumerate(reports):
        for j, l in enumerate(reports):
            if i == j:
                continue
            contrast = choose_contrast(w.correct_set, l.correct_set)
            if not contrast:
                continue
            w_full = bool(outputs) and outputs <= w.correct_set
            if not mode.admits(w_full):
                continue
            if sources[i].data == sources[j].data:
                logger.debug("%s: skipping (%d, %d), identical sources", prompt_id, i, j)
                continue
            try:
                if mode.filter_incorrect_signals:
                    w_mask = slices.spans(i, contrast)
                    l_mask = slices.spans(j, contrast)
                else:
                    w_mask = slices.body(i)
                    l_mask = slices.body(j)
            except SliceFailure as e:
                logger.warning("%s: skipping pair (%d, %d): %s", prompt_id, i, j, e)
                continue
            pairs.append(
                PreferencePair(
                    prompt_id=prompt_id,
                    w_id=w.candidate_id,
                    l_id=l.candidate_id,
                    y_w=sources[i].text,
                    y_l=sources[j].text,
                    contrast=tuple(sorted(contrast)),
                    w_mask=tuple(w_mask),
                    l_mask=tuple(l_mask),
                    w_fully_correct=w_full,
                )
            )
            if cap is not None and len(pairs) >= cap:
                return pairs
    return pairs


def check_pair(pair: PreferencePair, reports: Optional[Iterable] = None) -> list:
    """Problems with a pair; an empty list means it is valid."""
    problems = []
    contrast = frozenset(pair.contrast)
    if not contrast:
        problems.append("contrast set is empty")
    if pair.y_w == pair.y_l:
        problems.append("preferred and dispreferred sources are identical")
    for label, text, mask in (("w_mask", pair.y_w, pair.w_mask), ("l_mask", pair.y_l, pair.l_mask)):
        size = len(text.encode("utf-8"))
        if not mask:
            problems.append(f"{label} is empty")
        previous = None
        for span in mask:
            if span.end > size:
                problems.append(f"{label} span [{span.start}, {span.end}) exceeds source length {size}")
            if previous is not None and span.start < previous.end:
                problems.append(f"{label} spans overlap or are out of order at {span.start}")
            previous = span

    if reports is not None:
        by_id = {r.candidate_id: r for r in reports}
        w, l = by_id.get(pair.w_id), by_id.get(pair.l_id)
        if w is None or l is None:
            problems.append(f"no report for candidate {pair.w_id if w is None else pair.l_id}")
        else:
            for signal in sorted(contrast):
                if signal not in w.correct_set:
                    problems.append(f"contrast signal '{signal}' is not correct in the preferred sample")
                if signal in l.correct_set:
                    problems.append(f"contrast signal '{signal}' is correct in the dispreferred sample")
            if pair.w_fully_correct != w.fully_correct:
                problems.append("w_fully_correct disagrees with the preferred sample's report")
    return problems


def summarize_pairs(pairs: Iterable[PreferencePair]) -> dict:
    pairs = list(pairs)
    sizes = Counter(len(p.contrast) for p in pairs)
    complete = sum(p.w_fully_correct for p in pairs)
    return {
        "pairs": len(pairs),
        "complete": complete,
        "partial": len(pairs) - complete,
        "contrast_sizes": {str(k): sizes[k] for k in sorted(sizes)},
    }

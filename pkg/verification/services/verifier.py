"""
Differential per-signal verification.

The reference is parsed, classified and simulated once per prompt; every
candidate is simulated on the same StimulusSet and each reference output is
judged on its own: correct only if the candidate matches it on every cycle.

Candidate-side failures never raise. They become a report status
(parse_error, interface_mismatch, sim_error) with every signal incorrect.
Reference-side failures raise ReferenceInvalid and void the whole prompt.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from rtl.services import ast
from rtl.services.errors import FrontendError, SalvkitError
from rtl.services.parser import parse_module
from rtl.services.simulator import SimTrace, simulate
from rtl.services.source import SourceText, read_source
from rtl.services.stimulus import StimulusSet, stimuli_for
from rtl.services.subset import supported_subset_check
from rtl.services.timing import StageTimer

logger = logging.getLogger(__name__)

SIMULATED = "simulated"
INTERFACE_MISMATCH = "interface_mismatch"
PARSE_ERROR = "parse_error"
SIM_ERROR = "sim_error"
STATUSES = (SIMULATED, INTERFACE_MISMATCH, PARSE_ERROR, SIM_ERROR)


class ReferenceInvalid(SalvkitError):
    pass


@dataclass(frozen=True)
class SignalVerdict:
    signal: str
    correct: bool
    first_mismatch_cycle: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "signal": self.signal,
            "correct": self.correct,
            "first_mismatch_cycle": self.first_mismatch_cycle,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SignalVerdict":
        return cls(data["signal"], bool(data["correct"]), data.get("first_mismatch_cycle"))


@dataclass(frozen=True)
class CandidateReport:
    candidate_id: int
    verdicts: tuple
    status: str
    correct_set: frozenset

    @property
    def signals(self) -> list:
        return [v.signal for v in self.verdicts]

    @property
    def fully_correct(self) -> bool:
        return bool(self.verdicts) and all(v.correct for v in self.verdicts)

    def to_json(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "verdicts": [v.to_json() for v in self.verdicts],
            "status": self.status,
            "correct_set": sorted(self.correct_set),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, data: dict) -> "CandidateReport":
        verdicts = tuple(SignalVerdict.from_json(v) for v in data["verdicts"])
        status = data["status"]
        if status not in STATUSES:
            raise ValueError(f"unknown report status '{status}'")
        return cls(int(data["candidate_id"]), verdicts, status, frozenset(data["correct_set"]))


@dataclass(frozen=True)
class ReferenceRun:
    """Everything a worker needs to judge candidates; plain data, picklable."""

    stimuli: StimulusSet
    trace: SimTrace
    interface: frozenset
    outputs: tuple  # output names in port order


def _failed(candidate_id: int, outputs: Iterable[str], status: str) -> CandidateReport:
    verdicts = tuple(SignalVerdict(name, False) for name in outputs)
    return CandidateReport(candidate_id, verdicts, status, frozenset())


def compare_traces(reference: SimTrace, candidate: SimTrace, outputs: Iterable[str]) -> tuple:
    verdicts = []
    for name in outputs:
        expected = reference.outputs[name]
        got = candidate.outputs[name]
        mismatch = next((t for t, (a, b) in enumerate(zip(expected, got)) if a != b), None)
        verdicts.append(SignalVerdict(name, mismatch is None, mismatch))
    return tuple(verdicts)


def run_reference(
    reference: SourceText,
    n: int,
    seed: int,
    *,
    exhaustive: bool = False,
    max_bits: Optional[int] = None,
    stimuli: Optional[StimulusSet] = None,
    timer: Optional[StageTimer] = None,
) -> ReferenceRun:
    """Parse, classify and simulate the reference. Any failure is ReferenceInvalid."""
    timer = timer or StageTimer()
    try:
        with timer.stage("parse"):
            module = parse_module(reference)
        diagnostics = supported_subset_check(module)
        if diagnostics:
            raise ReferenceInvalid(
                f"reference {reference.origin} is outside the supported subset: "
                + "; ".join(d.format() for d in diagnostics)
            )
        if stimuli is None:
            stimuli = stimuli_for(module, n, seed, use_exhaustive=exhaustive, max_bits=max_bits)
        with timer.stage("simulate"):
            trace = simulate(module, stimuli)
    except ReferenceInvalid:
        raise
    except SalvkitError as e:
        raise ReferenceInvalid(f"reference {reference.origin} failed: {e}") from e
    return ReferenceRun(
        stimuli=stimuli,
        trace=trace,
        interface=module.interface(),
        outputs=tuple(p.name for p in module.outputs),
    )


def check_candidate(
    ref: ReferenceRun,
    candidate: SourceText,
    candidate_id: int,
    timer: Optional[StageTimer] = None,
) -> CandidateReport:
    timer = timer or StageTimer()
    try:
        with timer.stage("parse"):
            module = parse_module(candidate)
            diagnostics = supported_subset_check(module)
    except FrontendError as e:
        logger.info("candidate %d (%s): %s", candidate_id, candidate.origin, e)
        return _failed(candidate_id, ref.outputs, PARSE_ERROR)
    except Exception:
        logger.exception("candidate %d (%s): frontend crashed", candidate_id, candidate.origin)
        return _failed(candidate_id, ref.outputs, PARSE_ERROR)
    if diagnostics:
        logger.info("candidate %d (%s): %s", candidate_id, candidate.origin, diagnostics[0].format())
        return _failed(candidate_id, ref.outputs, PARSE_ERROR)

    if module.interface() != ref.interface:
        logger.info("candidate %d (%s): port list differs from the reference", candidate_id, candidate.origin)
        return _failed(candidate_id, ref.outputs, INTERFACE_MISMATCH)

    try:
        with timer.stage("simulate"):
            trace = simulate(module, ref.stimuli)
    except Exception as e:
        # Crash isolation: whatever happens here only costs this candidate.
        logger.warning("candidate %d (%s): simulation failed: %s", candidate_id, candidate.origin, e)
        return _failed(candidate_id, ref.outputs, SIM_ERROR)

    with timer.stage("compare"):
        verdicts = compare_traces(ref.trace, trace, ref.outputs)
    correct = frozenset(v.signal for v in verdicts if v.correct)
    return CandidateReport(candidate_id, verdicts, SIMULATED, correct)


def verify_candidate(
    reference: Union[SourceText, ReferenceRun],
    candidate: SourceText,
    stimuli: StimulusSet,
    *,
    candidate_id: int = 0,
) -> CandidateReport:
    if not isinstance(reference, ReferenceRun):
        reference = run_reference(reference, stimuli.n, stimuli.seed, stimuli=stimuli)
    return check_candidate(reference, candidate, candidate_id)


def _check_worker(args) -> tuple:
    ref, data, origin, candidate_id = args
    timer = StageTimer()
    report = check_candidate(ref, SourceText(data, origin), candidate_id, timer)
    return report, timer


def verify_prompt(
    reference: SourceText,
    candidates: list,
    n: int,
    seed: int,
    *,
    exhaustive: bool = False,
    max_bits: Optional[int] = None,
    workers: int = 1,
    timer: Optional[StageTimer] = None,
) -> list:
    """
    One report per candidate, in candidate order, all on the same stimuli.

    Raises ReferenceInvalid when the reference cannot be simulated.
    """
    timer = timer if timer is not None else StageTimer()
    ref = run_reference(reference, n, seed, exhaustive=exhaustive, max_bits=max_bits, timer=timer)
    jobs = [(ref, c.data, c.origin, i) for i, c in enumerate(candidates)]

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_check_worker, jobs))
    else:
        results = [_check_worker(job) for job in jobs]

    reports = []
    for report, worker_timer in results:
        timer.merge(worker_timer)
        reports.append(report)
    logger.debug(
        "%s: %d candidate(s), %d fully correct",
        reference.origin,
        len(reports),
        sum(r.fully_correct for r in reports),
    )
    return reports


# ---------------------------------------------------------------------------
# Candidate files and report files
# ---------------------------------------------------------------------------

def natural_key(path: Path) -> list:
    return [int(part) if part.isdigit() else part for part in re.split(r"(\d+)", path.name)]


def candidate_files(directory: Union[str, Path], reference_name: str = "ref.v") -> list:
    """`cand_*.v` in natural order, or every other `.v` file if there are none."""
    directory = Path(directory)
    files = sorted(directory.glob("cand_*.v"), key=natural_key)
    if not files:
        files = sorted((p for p in directory.glob("*.v") if p.name != reference_name), key=natural_key)
    return files


def read_candidates(directory: Union[str, Path]) -> list:
    return [read_source(p) for p in candidate_files(directory)]


def write_reports(reports: Iterable[CandidateReport], path: Union[str, Path]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for report in reports:
            f.write(report.dumps() + "\n")
            count += 1
    return count


def read_reports(path: Union[str, Path]) -> list:
    reports = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                reports.append(CandidateReport.from_json(json.loads(line)))
    return reports

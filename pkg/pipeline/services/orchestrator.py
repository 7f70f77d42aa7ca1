"""
Pipeline orchestrator.

Runs every prompt of a corpus through verify -> build pairs -> emit:

    <corpus>/<prompt_id>/ref.v
    <corpus>/<prompt_id>/cand_*.v      (or <candidates>/<prompt_id>/cand_*.v)

and writes into the output directory:

    prefs.jsonl               all preference records, prompt order
    reports/<prompt_id>.jsonl one CandidateReport per candidate
    manifest.json             RunManifest

Prompts are processed in a worker pool; the parent is the only writer and
merges results in prompt order, so outputs do not depend on worker count.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Optional

from django.conf import settings

from config import __version__
from pipeline.services.config import CorpusLayoutError, PipelineConfig
from pipeline.services.manifest import (
    ERROR,
    REFERENCE_INVALID,
    PromptResult,
    RunManifest,
    compute_content_hash,
)
from preferences.services.pairs import DatasetMode, build_pairs, summarize_pairs
from preferences.services.records import dumps_record
from rtl.services.source import read_source
from rtl.services.timing import StageTimer
from verification.services.verifier import SIMULATED, ReferenceInvalid, candidate_files, verify_prompt

if TYPE_CHECKING:
    from pipeline.services.runlog import RunLog

logger = logging.getLogger(__name__)

REFERENCE_NAME = "ref.v"


@dataclass(frozen=True)
class PromptEntry:
    prompt_id: str
    reference: Path
    candidates: tuple


@dataclass
class PromptOutcome:
    result: PromptResult
    report_lines: list = field(default_factory=list)
    record_lines: list = field(default_factory=list)
    timer: StageTimer = field(default_factory=StageTimer)


@dataclass(frozen=True)
class PromptJob:
    entry: PromptEntry
    n_stimuli: int
    seed: int
    mode: DatasetMode
    pair_cap: Optional[int]
    exhaustive: bool
    max_bits: Optional[int] = None


# ---------------------------------------------------------------------------
# Corpus discovery
# ---------------------------------------------------------------------------

def _candidates_for(prompt_dir: Path, candidates_root: Optional[Path], prompt_id: str) -> tuple:
    directory = candidates_root / prompt_id if candidates_root else prompt_dir
    if not directory.is_dir():
        return ()
    return tuple(candidate_files(directory, REFERENCE_NAME))


def _from_index(path: Path) -> list:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise CorpusLayoutError(f"cannot read corpus manifest {path}: {e}") from e
    prompts = data.get("prompts") if isinstance(data, dict) else data
    if not isinstance(prompts, list):
        raise CorpusLayoutError(f"corpus manifest {path} must list prompts")

    base = path.parent
    entries = []
    for item in prompts:
        try:
            prompt_id = str(item["id"])
            reference = base / item["ref"]
        except (KeyError, TypeError):
            raise CorpusLayoutError(f"corpus manifest {path}: each prompt needs 'id' and 'ref'") from None
        if "candidates" in item:
            candidates = tuple(base / c for c in item["candidates"])
        else:
            directory = base / item.get("candidates_dir", str(Path(item["ref"]).parent))
            candidates = tuple(candidate_files(directory, reference.name)) if directory.is_dir() else ()
        entries.append(PromptEntry(prompt_id, reference, candidates))
    return entries


def discover_corpus(config: PipelineConfig) -> list:
    if config.manifest:
        entries = _from_index(Path(config.manifest))
    else:
        root = Path(config.corpus)
        if not root.is_dir():
            raise CorpusLayoutError(f"corpus directory {root} does not exist")
        candidates_root = Path(config.candidates) if config.candidates else None
        entries = []
        for prompt_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            prompt_id = prompt_dir.name
            entries.append(
                PromptEntry(prompt_id, prompt_dir / REFERENCE_NAME, _candidates_for(prompt_dir, candidates_root, prompt_id))
            )

    if not entries:
        raise CorpusLayoutError("corpus holds no prompts")
    seen = set()
    for entry in entries:
        if entry.prompt_id in seen:
            raise CorpusLayoutError(f"duplicate prompt id '{entry.prompt_id}'")
        seen.add(entry.prompt_id)
        if not entry.reference.is_file():
            raise CorpusLayoutError(f"prompt '{entry.prompt_id}' has no reference file {entry.reference}")
    return entries


# ---------------------------------------------------------------------------
# One prompt (runs inside a worker)
# ---------------------------------------------------------------------------

def process_prompt(job: PromptJob) -> PromptOutcome:
    entry = job.entry
    result = PromptResult(entry.prompt_id, candidates=len(entry.candidates))
    outcome = PromptOutcome(result)
    try:
        reference = read_source(entry.reference)
        candidates = [read_source(p) for p in entry.candidates]
        reports = verify_prompt(
            reference,
            candidates,
            job.n_stimuli,
            job.seed,
            exhaustive=job.exhaustive,
            max_bits=job.max_bits,
            timer=outcome.timer,
        )
        pairs = build_pairs(
            reports,
            candidates,
            job.mode,
            job.pair_cap,
            prompt_id=entry.prompt_id,
            timer=outcome.timer,
        )
    except ReferenceInvalid as e:
        result.status = REFERENCE_INVALID
        result.error = str(e)
        return outcome
    except Exception as e:
        logger.exception("prompt %s failed", entry.prompt_id)
        result.status = ERROR
        result.error = f"{type(e).__name__}: {e}"
        return outcome

    summary = summarize_pairs(pairs)
    result.simulated = sum(r.status == SIMULATED for r in reports)
    result.pairs = summary["pairs"]
    result.pairs_complete = summary["complete"]
    result.pairs_partial = summary["partial"]
    result.contrast_sizes = summary["contrast_sizes"]
    outcome.report_lines = [r.dumps() for r in reports]
    outcome.record_lines = [dumps_record(p) for p in pairs]
    return outcome


# ---------------------------------------------------------------------------
# Orchestrator
# ---------------------------------------------------------------------------

class SalvPipelineOrchestrator:
    """Runs a corpus end to end and writes the run artifacts."""

    def __init__(self, config: PipelineConfig, run_log: Optional[RunLog] = None):
        self.config = config
        self.run_log = run_log
        self.output = Path(config.output)

    def log(self, level: str, message: str, extra: Optional[dict] = None):
        if self.run_log is not None:
            self.run_log.log(level, message, extra)
        else:
            getattr(logger, level, logger.info)(message)

    def _jobs(self, entries: list) -> list:
        c = self.config
        max_bits = settings.SALVKIT_EXHAUSTIVE_MAX_BITS
        return [PromptJob(e, c.n_stimuli, c.seed, c.mode, c.pair_cap, c.exhaustive, max_bits) for e in entries]

    def _outcomes(self, jobs: list):
        workers = min(self.config.workers, len(jobs))
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                yield from pool.map(process_prompt, jobs)
        else:
            for job in jobs:
                yield process_prompt(job)

    def run(self) -> RunManifest:
        """
        Process every prompt and write prefs.jsonl, reports/ and manifest.json.

        Raises CorpusLayoutError before any output is written if the corpus
        is malformed. Per-prompt failures are recorded, never raised.
        """
        started = time.perf_counter()
        entries = discover_corpus(self.config)
        if self.run_log is not None:
            self.run_log.start(self.config.to_json())
        self.log(
            "info",
            f"Pipeline starting: {len(entries)} prompt(s), N={self.config.n_stimuli}, "
            f"seed={self.config.seed}, mode={self.config.mode.spelling}, workers={self.config.workers}",
        )

        reports_dir = self.output / "reports"
        reports_dir.mkdir(parents=True, exist_ok=True)
        prefs_path = self.output / "prefs.jsonl"
        report_paths = []
        results = []
        stages = StageTimer()

        with open(prefs_path, "w", encoding="utf-8", newline="\n") as prefs:
            for outcome in self._outcomes(self._jobs(entries)):
                result = outcome.result
                results.append(result)
                stages.merge(outcome.timer)

                report_path = reports_dir / f"{result.prompt_id}.jsonl"
                with open(report_path, "w", encoding="utf-8", newline="\n") as f:
                    f.writelines(line + "\n" for line in outcome.report_lines)
                report_paths.append(report_path)
                prefs.writelines(line + "\n" for line in outcome.record_lines)

                if result.status == REFERENCE_INVALID:
                    self.log("warning", f"Prompt '{result.prompt_id}' skipped: {result.error}", {"prompt": result.prompt_id})
                elif result.status == ERROR:
                    self.log("error", f"Prompt '{result.prompt_id}' failed: {result.error}", {"prompt": result.prompt_id})
                else:
                    self.log(
                        "debug",
                        f"Prompt '{result.prompt_id}': {result.simulated}/{result.candidates} simulated, {result.pairs} pair(s)",
                        result.to_json(),
                    )

        manifest = RunManifest(
            version=__version__,
            config=self.config.to_json(),
            hashed_config=self.config.hashed_json(),
            prompts=results,
            stages=stages,
        )
        manifest.content_hash = compute_content_hash(manifest, prefs_path, report_paths)
        manifest.wall_clock_seconds = time.perf_counter() - started
        manifest.write(self.output / "manifest.json")

        totals = manifest.totals
        if totals["succeeded"] == 0:
            status, level = "error", "error"
        elif totals["failed"]:
            status, level = "warning", "warning"
        else:
            status, level = "success", "info"
        self.log(
            level,
            f"Pipeline finished: {totals['succeeded']}/{totals['prompts']} prompt(s) succeeded, "
            f"{totals['pairs']} pair(s) written, hash {manifest.content_hash[:12]}",
            {"totals": totals},
        )
        if self.run_log is not None:
            self.run_log.finish(status, manifest.to_json())
        return manifest


def run_pipeline(config: PipelineConfig, run_log: Optional[RunLog] = None) -> RunManifest:
    return SalvPipelineOrchestrator(config, run_log).run()

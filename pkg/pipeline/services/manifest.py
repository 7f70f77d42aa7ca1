"""
Run manifest: what a pipeline run consumed, produced and spent.

The content hash covers prefs.jsonl, every per-prompt report file and the
timing-free part of the manifest, so it is stable across reruns and worker
counts.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from pipeline.services.config import UNHASHED_FIELDS
from rtl.services.timing import STAGES, StageTimer

logger = logging.getLogger(__name__)

OK = "ok"
REFERENCE_INVALID = "reference_invalid"
ERROR = "error"


@dataclass
class PromptResult:
    prompt_id: str
    status: str = OK
    candidates: int = 0
    simulated: int = 0
    pairs: int = 0
    pairs_complete: int = 0
    pairs_partial: int = 0
    contrast_sizes: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.status == OK

    def to_json(self) -> dict:
        return {
            "id": self.prompt_id,
            "status": self.status,
            "candidates": self.candidates,
            "simulated": self.simulated,
            "pairs": self.pairs,
            "pairs_complete": self.pairs_complete,
            "pairs_partial": self.pairs_partial,
            "contrast_sizes": dict(self.contrast_sizes),
            "error": self.error,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PromptResult":
        return cls(
            prompt_id=data["id"],
            status=data["status"],
            candidates=data.get("candidates", 0),
            simulated=data.get("simulated", 0),
            pairs=data.get("pairs", 0),
            pairs_complete=data.get("pairs_complete", 0),
            pairs_partial=data.get("pairs_partial", 0),
            contrast_sizes=data.get("contrast_sizes", {}),
            error=data.get("error"),
        )


@dataclass
class RunManifest:
    version: str
    config: dict
    hashed_config: dict
    prompts: list
    stages: StageTimer
    wall_clock_seconds: float = 0.0
    content_hash: str = ""

    @property
    def totals(self) -> dict:
        sizes = Counter()
        for p in self.prompts:
            sizes.update({k: int(v) for k, v in p.contrast_sizes.items()})
        return {
            "prompts": len(self.prompts),
            "succeeded": sum(p.succeeded for p in self.prompts),
            "failed": sum(not p.succeeded for p in self.prompts),
            "candidates": sum(p.candidates for p in self.prompts),
            "simulated": sum(p.simulated for p in self.prompts),
            "pairs": sum(p.pairs for p in self.prompts),
            "pairs_complete": sum(p.pairs_complete for p in self.prompts),
            "pairs_partial": sum(p.pairs_partial for p in self.prompts),
            "contrast_sizes": {k: sizes[k] for k in sorted(sizes, key=int)},
        }

    @property
    def succeeded(self) -> int:
        return sum(p.succeeded for p in self.prompts)

    def hashed_json(self) -> dict:
        return {
            "version": self.version,
            "config": self.hashed_config,
            "prompts": [p.to_json() for p in self.prompts],
            "totals": self.totals,
        }

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "config": self.config,
            "prompts": [p.to_json() for p in self.prompts],
            "totals": self.totals,
            "stages": self.stages.to_json(),
            "wall_clock_seconds": self.wall_clock_seconds,
            "content_hash": self.content_hash,
        }

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_json(), f, indent=2)
            f.write("\n")

    @classmethod
    def from_json(cls, data: dict) -> "RunManifest":
        if not isinstance(data, dict):
            raise ValueError("a run manifest is a JSON object")
        config = data.get("config", {})
        return cls(
            version=data.get("version", ""),
            config=config,
            hashed_config={k: v for k, v in config.items() if k not in UNHASHED_FIELDS},
            prompts=[PromptResult.from_json(p) for p in data.get("prompts", [])],
            stages=StageTimer.from_json(data.get("stages", {})),
            wall_clock_seconds=float(data.get("wall_clock_seconds", 0.0)),
            content_hash=data.get("content_hash", ""),
        )

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def compute_content_hash(manifest: RunManifest, prefs_path: Path, report_paths: list) -> str:
    digest = hashlib.sha256()
    for path in [prefs_path, *report_paths]:
        digest.update(Path(path).name.encode("utf-8") + b"\0")
        digest.update(Path(path).read_bytes())
        digest.update(b"\0")
    digest.update(json.dumps(manifest.hashed_json(), sort_keys=True, separators=(",", ":")).encode("utf-8"))
    return digest.hexdigest()


def stage_timings(manifest: RunManifest) -> list:
    """(stage, mean seconds per sample) for the four pipeline stages."""
    return [(stage, manifest.stages.totals[stage].mean if stage in manifest.stages.totals else 0.0) for stage in STAGES]


def format_timings(rows: list) -> str:
    width = max(len("stage"), *(len(stage) for stage, _ in rows))
    lines = [f"{'stage':<{width}}  mean s/sample"]
    lines += [f"{stage:<{width}}  {mean:.6f}" for stage, mean in rows]
    return "\n".join(lines)

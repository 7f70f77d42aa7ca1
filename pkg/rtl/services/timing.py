"""
Per-stage wall-clock accounting on the monotonic clock.

Timings never feed into any output hash; they are reported next to the
artifacts in the run manifest.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

STAGES = ("parse", "graph+slice", "simulate", "compare")


@dataclass
class StageTotal:
    seconds: float = 0.0
    samples: int = 0

    @property
    def mean(self) -> float:
        return self.seconds / self.samples if self.samples else 0.0


@dataclass
class StageTimer:
    totals: dict = field(default_factory=lambda: {s: StageTotal() for s in STAGES})

    @contextmanager
    def stage(self, name: str, samples: int = 1):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.add(name, time.perf_counter() - start, samples)

    def add(self, name: str, seconds: float, samples: int = 1):
        total = self.totals.setdefault(name, StageTotal())
        total.seconds += seconds
        total.samples += samples

    def merge(self, other: "StageTimer"):
        for name, total in other.totals.items():
            self.add(name, total.seconds, total.samples)

    def to_json(self) -> dict:
        return {
            name: {"seconds": t.seconds, "samples": t.samples, "mean_seconds": t.mean}
            for name, t in self.totals.items()
        }

    @classmethod
    def from_json(cls, data: dict) -> "StageTimer":
        timer = cls(totals={})
        for name, entry in data.items():
            timer.totals[name] = StageTotal(float(entry["seconds"]), int(entry["samples"]))
        return timer

"""
Database run log for pipeline runs.

Recording is best effort: if the tables are missing (migrations not applied)
or the database is unreachable, the run continues and only a warning is
logged.
"""

from __future__ import annotations

import logging
from typing import Optional

from django.db import DatabaseError
from django.utils import timezone

from pipeline.models import PipelineEvent, PipelineRun

logger = logging.getLogger(__name__)


class RunLog:
    def __init__(self, echo=None):
        self.run: Optional[PipelineRun] = None
        self.echo = echo
        self.enabled = True

    def _disable(self, error: Exception):
        if self.enabled:
            logger.warning("pipeline run log unavailable, continuing without it: %s", error)
        self.enabled = False

    def start(self, config: dict) -> Optional[PipelineRun]:
        try:
            self.run = PipelineRun.objects.create(
                config=config,
                started_at=timezone.now(),
                status="running",
            )
        except DatabaseError as e:
            self._disable(e)
        return self.run

    def log(self, level: str, message: str, extra: Optional[dict] = None):
        getattr(logger, level, logger.info)(message)
        if self.echo is not None:
            self.echo(level, message)
        if not (self.enabled and self.run):
            return
        try:
            PipelineEvent.objects.create(
                run=self.run,
                timestamp=timezone.now(),
                level=level,
                message=message,
                extra=extra or {},
            )
        except DatabaseError as e:
            self._disable(e)

    def finish(self, status: str, manifest: Optional[dict] = None):
        if not (self.enabled and self.run):
            return
        run = self.run
        run.status = status
        run.finished_at = timezone.now()
        if manifest is not None:
            totals = manifest.get("totals", {})
            run.prompts = totals.get("prompts", 0)
            run.prompts_failed = totals.get("failed", 0)
            run.pairs = totals.get("pairs", 0)
            run.content_hash = manifest.get("content_hash", "")
            run.manifest = manifest
        try:
            run.save()
        except DatabaseError as e:
            self._disable(e)

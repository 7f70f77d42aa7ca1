from django.contrib import admin
from django.test import TestCase
from django.utils import timezone

from pipeline.admin import PipelineEventAdmin, PipelineRunAdmin
from pipeline.models import PipelineEvent, PipelineRun


class AdminTests(TestCase):
    def setUp(self):
        self.run = PipelineRun.objects.create(started_at=timezone.now(), content_hash="ab" * 32)

    def test_registered(self):
        self.assertIsInstance(admin.site._registry[PipelineRun], PipelineRunAdmin)
        self.assertIsInstance(admin.site._registry[PipelineEvent], PipelineEventAdmin)

    def test_list_columns(self):
        self.assertEqual(admin.site._registry[PipelineRun].short_hash(self.run), "abababababab")
        event = PipelineEvent.objects.create(run=self.run, timestamp=timezone.now(), message="x" * 100)
        short = admin.site._registry[PipelineEvent].short_message(event)
        self.assertEqual(short, "x" * 75 + "...")
        self.assertIn("RUNNING", str(self.run).upper())

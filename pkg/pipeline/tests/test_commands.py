import json
import shutil
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from pipeline.services.manifest import RunManifest
from pipeline.tests import fixture_path
from rtl.services.timing import STAGES


@override_settings(SALVKIT_WORKERS=1)
class PipelineCommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def call(self, *args):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO())
        return out.getvalue()

    def test_fuzz_then_run_then_timings(self):
        corpus, out = self.dir / "corpus", self.dir / "out"
        self.assertIn("5 prompt(s) written", self.call("fuzz", "--count", "5", "--candidates", "3", "--seed", "2", "-o", str(corpus)))
        self.assertEqual(len(list(corpus.iterdir())), 5)

        printed = self.call("run", "--corpus", str(corpus), "-o", str(out), "--n", "40", "--no-db")
        manifest = RunManifest.load(out / "manifest.json")
        self.assertIn(manifest.content_hash, printed)
        self.assertEqual(manifest.config["n_stimuli"], 40)
        self.assertEqual(manifest.totals["prompts"], 5)

        table = self.call("timings", str(out / "manifest.json"))
        for stage in STAGES:
            self.assertIn(stage, table)
        data = json.loads(self.call("timings", str(out / "manifest.json"), "--json"))
        self.assertEqual(list(data), list(STAGES))

    def test_run_with_config_file(self):
        config = self.dir / "salvkit.json"
        config.write_text(json.dumps({"corpus": str(fixture_path("corpus")), "mode": "complete", "n_stimuli": 60}))
        self.call("run", "--config", str(config), "-o", str(self.dir / "out"), "--no-db")
        manifest = RunManifest.load(self.dir / "out" / "manifest.json")
        self.assertEqual(manifest.config["mode"], "complete")
        self.assertEqual(manifest.config["n_stimuli"], 60)
        self.assertEqual(manifest.totals["pairs"], 3)

    def test_no_prompt_succeeds(self):
        corpus = self.dir / "corpus"
        shutil.copytree(fixture_path("corpus") / "broken", corpus / "broken")
        with self.assertRaises(CommandError) as cm:
            self.call("run", "--corpus", str(corpus), "-o", str(self.dir / "out"), "--no-db")
        self.assertEqual(cm.exception.returncode, 2)
        self.assertTrue((self.dir / "out" / "manifest.json").exists())

    def test_bad_corpus_is_exit_one(self):
        with self.assertRaises(CommandError) as cm:
            self.call("run", "--corpus", str(self.dir / "nowhere"), "-o", str(self.dir / "out"), "--no-db")
        self.assertEqual(cm.exception.returncode, 1)

    def test_fuzz_arguments(self):
        with self.assertRaises(CommandError):
            self.call("fuzz", "--count", "0", "-o", str(self.dir / "c"))

    def test_timings_bad_manifest(self):
        path = self.dir / "manifest.json"
        path.write_text("[]")
        with self.assertRaises(CommandError):
            self.call("timings", str(path))

import json
import shutil
import tempfile
from pathlib import Path

from django.test import SimpleTestCase, TestCase, override_settings

from pipeline.models import PipelineEvent, PipelineRun
from pipeline.services.config import CorpusLayoutError, resolve_config
from pipeline.services.manifest import REFERENCE_INVALID, RunManifest, stage_timings
from pipeline.services.orchestrator import discover_corpus, run_pipeline
from pipeline.services.runlog import RunLog
from pipeline.tests import fixture_path
from preferences.services.records import read_records
from rtl.services.timing import STAGES
from verification.services.verifier import read_reports

CORPUS = fixture_path("corpus")


class OrchestratorTestMixin:
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def config(self, name="out", **overrides):
        overrides.setdefault("corpus", str(CORPUS))
        overrides.setdefault("workers", 1)
        return resolve_config(output=str(self.dir / name), n_stimuli=100, seed=0, **overrides)


@override_settings(SALVKIT_WORKERS=1)
class RunPipelineTests(OrchestratorTestMixin, SimpleTestCase):
    def test_outputs(self):
        manifest = run_pipeline(self.config())
        out = self.dir / "out"

        self.assertEqual([p.prompt_id for p in manifest.prompts], ["broken", "fig1", "xor"])
        self.assertEqual([p.status for p in manifest.prompts], [REFERENCE_INVALID, "ok", "ok"])
        totals = manifest.totals
        self.assertEqual(totals["prompts"], 3)
        self.assertEqual(totals["succeeded"], 2)
        self.assertEqual(totals["failed"], 1)
        self.assertEqual(totals["candidates"], 6)
        self.assertEqual(totals["simulated"], 5)
        self.assertEqual(totals["pairs"], 4)
        self.assertEqual(totals["pairs_complete"], 3)
        self.assertEqual(totals["pairs_partial"], 1)
        self.assertEqual(totals["contrast_sizes"], {"1": 3, "2": 1})

        pairs = read_records(out / "prefs.jsonl")
        self.assertEqual(
            [(p.prompt_id, p.w_id, p.l_id, p.contrast) for p in pairs],
            [("fig1", 0, 1, ("a",)), ("fig1", 0, 2, ("a", "d")), ("fig1", 1, 2, ("d",)), ("xor", 1, 0, ("y",))],
        )

        self.assertEqual(read_reports(out / "reports" / "broken.jsonl"), [])
        fig1 = read_reports(out / "reports" / "fig1.jsonl")
        self.assertEqual([r.correct_set for r in fig1], [{"a", "d"}, {"d"}, set()])

        written = RunManifest.load(out / "manifest.json")
        self.assertEqual(written.content_hash, manifest.content_hash)
        self.assertEqual(len(written.content_hash), 64)
        self.assertEqual(written.totals, totals)
        self.assertIn("initial", written.prompts[0].error)

    def test_stage_timings(self):
        manifest = run_pipeline(self.config())
        rows = stage_timings(manifest)
        self.assertEqual([stage for stage, _ in rows], list(STAGES))
        self.assertTrue(all(mean > 0.0 for _, mean in rows))
        self.assertGreater(manifest.stages.totals["simulate"].samples, 0)

    def test_rerun_and_worker_count_keep_the_hash(self):
        first = run_pipeline(self.config("a"))
        again = run_pipeline(self.config("b"))
        parallel = run_pipeline(self.config("c", workers=3))
        self.assertEqual(first.content_hash, again.content_hash)
        self.assertEqual(first.content_hash, parallel.content_hash)
        self.assertEqual((self.dir / "a" / "prefs.jsonl").read_bytes(), (self.dir / "c" / "prefs.jsonl").read_bytes())

    def test_settings_change_the_hash(self):
        base = run_pipeline(self.config("a"))
        other = run_pipeline(self.config("b", mode="complete"))
        self.assertNotEqual(base.content_hash, other.content_hash)
        self.assertEqual(other.totals["pairs"], 3)
        self.assertEqual(other.totals["pairs_partial"], 0)

    def test_unfiltered_masks_are_whole_modules(self):
        run_pipeline(self.config(filter_incorrect_signals=False))
        for pair in read_records(self.dir / "out" / "prefs.jsonl"):
            self.assertEqual(len(pair.w_mask), 1)
            self.assertEqual(pair.w_mask[0].start, 0)

    def test_corpus_index(self):
        manifest = run_pipeline(self.config(corpus=None, manifest=str(fixture_path("index.json"))))
        self.assertEqual([p.prompt_id for p in manifest.prompts], ["x", "f"])
        pairs = read_records(self.dir / "out" / "prefs.jsonl")
        self.assertEqual([(p.prompt_id, p.w_id, p.l_id) for p in pairs], [("x", 1, 0), ("f", 1, 0)])

    def test_separate_candidate_tree(self):
        refs, cands = self.dir / "refs", self.dir / "cands"
        (refs / "xor").mkdir(parents=True)
        shutil.copy(CORPUS / "xor" / "ref.v", refs / "xor" / "ref.v")
        shutil.copytree(CORPUS / "xor", cands / "xor")
        (cands / "xor" / "ref.v").unlink()
        manifest = run_pipeline(self.config(corpus=str(refs), candidates=str(cands)))
        self.assertEqual(manifest.totals["candidates"], 2)
        self.assertEqual(manifest.totals["pairs"], 1)

    def test_prompt_without_candidates(self):
        corpus = self.dir / "corpus"
        shutil.copytree(CORPUS / "xor", corpus / "xor")
        (corpus / "lonely").mkdir()
        shutil.copy(CORPUS / "xor" / "ref.v", corpus / "lonely" / "ref.v")
        manifest = run_pipeline(self.config(corpus=str(corpus)))
        lonely = manifest.prompts[0]
        self.assertEqual((lonely.prompt_id, lonely.status, lonely.candidates, lonely.pairs), ("lonely", "ok", 0, 0))
        self.assertEqual(manifest.totals["succeeded"], 2)

    @override_settings(SALVKIT_EXHAUSTIVE_MAX_BITS=20)
    def test_exhaustive_run_honours_the_bit_limit(self):
        wide = run_pipeline(self.config("a", exhaustive=True))
        self.assertEqual([p.status for p in wide.prompts], [REFERENCE_INVALID, "ok", "ok"])
        with self.settings(SALVKIT_EXHAUSTIVE_MAX_BITS=4):
            narrow = run_pipeline(self.config("b", exhaustive=True))
        fig1 = narrow.prompts[1]
        self.assertEqual((fig1.prompt_id, fig1.status), ("fig1", REFERENCE_INVALID))
        self.assertIn("exhaustive limit of 4", fig1.error)
        self.assertEqual(narrow.prompts[2].status, "ok")

    def test_layout_errors(self):
        with self.assertRaises(CorpusLayoutError):
            discover_corpus(self.config(corpus=str(self.dir / "nowhere")))
        (self.dir / "empty").mkdir()
        with self.assertRaises(CorpusLayoutError):
            discover_corpus(self.config(corpus=str(self.dir / "empty")))
        (self.dir / "noref" / "p0").mkdir(parents=True)
        with self.assertRaises(CorpusLayoutError):
            run_pipeline(self.config(corpus=str(self.dir / "noref")))
        self.assertFalse((self.dir / "out").exists())

        index = self.dir / "index.json"
        index.write_text(json.dumps([{"id": "a", "ref": "a.v"}, {"id": "a", "ref": "a.v"}]))
        (self.dir / "a.v").write_text("module a(input x, output y); assign y = x; endmodule\n")
        with self.assertRaisesRegex(CorpusLayoutError, "duplicate"):
            discover_corpus(self.config(corpus=None, manifest=str(index)))


@override_settings(SALVKIT_WORKERS=1)
class RunLogTests(OrchestratorTestMixin, TestCase):
    def test_run_is_recorded(self):
        echoed = []
        manifest = run_pipeline(self.config(), RunLog(echo=lambda level, message: echoed.append(level)))
        run = PipelineRun.objects.get()
        self.assertEqual(run.status, "warning")
        self.assertEqual(run.prompts, 3)
        self.assertEqual(run.prompts_failed, 1)
        self.assertEqual(run.pairs, 4)
        self.assertEqual(run.content_hash, manifest.content_hash)
        self.assertIsNotNone(run.finished_at)
        levels = list(PipelineEvent.objects.filter(run=run).order_by("pk").values_list("level", flat=True))
        self.assertIn("warning", levels)
        self.assertEqual(levels, echoed)

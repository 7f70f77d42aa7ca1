import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from preferences.services.pairs import check_pair
from preferences.services.records import read_records
from verification.services.verifier import read_reports
from verification.tests import fixture_path as verification_fixture


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def call(self, *args):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO())
        return out.getvalue()


class BuildPrefsCommandTests(CommandTestCase):
    def setUp(self):
        super().setUp()
        self.cands = str(verification_fixture("fig1"))
        self.ref = str(verification_fixture("fig1/ref.v"))
        self.reports = str(self.dir / "reports.jsonl")
        self.call("verify", "--ref", self.ref, "--cands", self.cands, "-o", self.reports)

    def test_filtered(self):
        output = self.dir / "prefs.jsonl"
        out = self.call(
            "build_prefs", "--reports", self.reports, "--cands", self.cands, "--ref", self.ref,
            "--prompt-id", "fig1", "--check", "-o", str(output),
        )
        self.assertIn("5 pair(s) written", out)
        self.assertIn("(3 complete, 2 partial)", out)
        pairs = read_records(output)
        self.assertEqual([(p.w_id, p.l_id) for p in pairs], [(0, 1), (0, 3), (0, 4), (1, 3), (1, 4)])
        self.assertEqual({p.prompt_id for p in pairs}, {"fig1"})
        reports = read_reports(self.reports)
        for pair in pairs:
            self.assertEqual(check_pair(pair, reports), [])

    def test_unfiltered_keeps_unparseable_losers(self):
        output = self.dir / "prefs.jsonl"
        out = self.call(
            "build_prefs", "--reports", self.reports, "--cands", self.cands,
            "--no-filter-incorrect-signals", "-o", str(output),
        )
        self.assertIn("7 pair(s) written", out)

    def test_mode_and_cap(self):
        output = self.dir / "prefs.jsonl"
        self.call(
            "build_prefs", "--reports", self.reports, "--cands", self.cands,
            "--mode", "partial", "-o", str(output),
        )
        self.assertEqual({p.w_id for p in read_records(output)}, {1})
        self.call("build_prefs", "--reports", self.reports, "--cands", self.cands, "--cap", "2", "-o", str(output))
        self.assertEqual(len(read_records(output)), 2)

    def test_report_count_must_match(self):
        (self.dir / "short.jsonl").write_text(Path(self.reports).read_text().splitlines()[0] + "\n")
        with self.assertRaises(CommandError) as cm:
            self.call(
                "build_prefs", "--reports", str(self.dir / "short.jsonl"), "--cands", self.cands,
                "-o", str(self.dir / "prefs.jsonl"),
            )
        self.assertEqual(cm.exception.returncode, 1)

    def test_unknown_mode(self):
        with self.assertRaises(CommandError):
            self.call(
                "build_prefs", "--reports", self.reports, "--cands", self.cands,
                "--mode", "all", "-o", str(self.dir / "prefs.jsonl"),
            )


class DpoCheckCommandTests(CommandTestCase):
    def write_batch(self, **extra):
        data = {
            "w_policy_logps": [-1.0, -0.2],
            "w_ref_logps": [-3.0, -0.9],
            "l_policy_logps": [-4.0],
            "l_ref_logps": [-1.0],
            "w_mask": [True, False],
            "l_mask": [True],
        }
        data.update(extra)
        path = self.dir / "batch.json"
        path.write_text(json.dumps(data))
        return str(path)

    def test_json(self):
        result = json.loads(self.call("dpo_check", "--batch", self.write_batch(), "--json"))
        self.assertAlmostEqual(result["margin"], 0.5)
        self.assertAlmostEqual(result["loss"], 0.474077, places=6)
        self.assertTrue(result["reward_accurate"])
        self.assertLessEqual(result["max_gradient_error"], 1e-6)

    def test_beta_override(self):
        result = json.loads(self.call("dpo_check", "--batch", self.write_batch(), "--beta", "1.0", "--json"))
        self.assertAlmostEqual(result["margin"], 5.0)

    def test_text(self):
        out = self.call("dpo_check", "--batch", self.write_batch())
        self.assertIn("loss:", out)
        self.assertIn("max gradient error:", out)

    def test_bad_batch(self):
        with self.assertRaises(CommandError):
            self.call("dpo_check", "--batch", self.write_batch(w_policy_logps=[0.5, -0.2]))
        path = self.dir / "broken.json"
        path.write_text("{")
        with self.assertRaises(CommandError):
            self.call("dpo_check", "--batch", str(path))


class PassAtKCommandTests(CommandTestCase):
    def test_single_k(self):
        self.assertEqual(self.call("passk", "--n", "5", "--c", "2", "--k", "3").strip(), "0.9")

    def test_several_k(self):
        out = self.call("passk", "--n", "5", "--c", "2", "--k", "1", "3")
        self.assertEqual(out.splitlines(), ["pass@1: 0.4", "pass@3: 0.9"])

    def test_results_file(self):
        path = self.dir / "results.jsonl"
        path.write_text('{"n": 2, "c": 1}\n{"n": 20, "c": 20}\n')
        self.assertEqual(self.call("passk", "--results", str(path), "--k", "1").strip(), "pass@1: 0.75")

    def test_domain_error(self):
        with self.assertRaises(CommandError):
            self.call("passk", "--n", "5", "--c", "6", "--k", "1")
        with self.assertRaises(CommandError):
            self.call("passk", "--k", "1", "--c", "1")

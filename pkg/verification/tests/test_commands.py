import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from verification.services.verifier import read_reports
from verification.tests import fixture_path


class VerifyCommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def call(self, *args):
        out, err = StringIO(), StringIO()
        call_command(*args, stdout=out, stderr=err)
        return out.getvalue(), err.getvalue()

    def test_reports_to_stdout(self):
        out, err = self.call("verify", "--ref", str(fixture_path("fig1/ref.v")), "--cands", str(fixture_path("fig1")), "--n", "50")
        lines = [json.loads(line) for line in out.splitlines() if line.strip()]
        self.assertEqual([r["candidate_id"] for r in lines], [0, 1, 2, 3, 4])
        self.assertEqual(lines[1]["correct_set"], ["d"])
        self.assertEqual(lines[2]["status"], "parse_error")
        self.assertIn("5 candidate(s): 1 fully correct", err)

    def test_reports_to_file(self):
        path = self.dir / "reports.jsonl"
        out, _ = self.call(
            "verify", "--ref", str(fixture_path("fig1/ref.v")), "--cands", str(fixture_path("fig1")), "-o", str(path)
        )
        self.assertIn("reports in", out)
        self.assertEqual(len(read_reports(path)), 5)

    def test_invalid_reference(self):
        with self.assertRaises(CommandError) as cm:
            self.call("verify", "--ref", str(fixture_path("fig1/cand_2.v")), "--cands", str(fixture_path("fig1")))
        self.assertEqual(cm.exception.returncode, 1)

    def test_empty_candidate_directory(self):
        (self.dir / "ref.v").write_text("module m(input a, output y); assign y = a; endmodule\n")
        with self.assertRaises(CommandError):
            self.call("verify", "--ref", str(self.dir / "ref.v"), "--cands", str(self.dir))

    def test_missing_required_flag(self):
        with self.assertRaises(CommandError) as cm:
            self.call("verify", "--ref", str(fixture_path("fig1/ref.v")))
        self.assertEqual(cm.exception.returncode, 1)

import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from rtl.tests import FIXTURES, fixture_path


class RtlCommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def call(self, *args, **options):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO(), **options)
        return out.getvalue()

    def test_parse_summary(self):
        out = self.call("parse", str(fixture_path("counter.v")))
        self.assertIn("module counter", out)
        self.assertIn("rst_n", out)

    def test_parse_json(self):
        data = json.loads(self.call("parse", str(fixture_path("alu.v")), "--json"))
        self.assertEqual(data["module"], "alu")
        self.assertEqual([p["name"] for p in data["ports"]], ["a", "b", "op", "y", "zero"])
        self.assertEqual(data["diagnostics"], [])
        self.assertEqual([i["kind"] for i in data["items"]], ["assign", "always", "assign"])

    def test_parse_diagnostics_fail(self):
        with self.assertRaises(CommandError) as cm:
            self.call("parse", str(fixture_path("bad_initial.v")))
        self.assertEqual(cm.exception.returncode, 1)

    def test_parse_syntax_error_fails(self):
        path = self.dir / "broken.v"
        path.write_text("module broken(input a, output b);\n  assign b = ;\nendmodule\n")
        with self.assertRaises(CommandError):
            self.call("parse", str(path))

    def test_slice(self):
        out = self.call("slice", str(fixture_path("fig1.v")), "--signal", "d")
        self.assertIn("assign d = x | z;", out)
        self.assertNotIn("assign a", out)

    def test_slice_json_and_graph(self):
        data = json.loads(self.call("slice", str(fixture_path("fig1.v")), "--signal", "a", "--json"))
        self.assertEqual(data["kept_signals"], ["a", "x", "y"])
        graph = json.loads(self.call("slice", str(fixture_path("fig1.v")), "--graph"))
        self.assertEqual(graph["module"], "fig1")

    def test_slice_unknown_signal(self):
        with self.assertRaises(CommandError):
            self.call("slice", str(fixture_path("fig1.v")), "--signal", "x")

    def test_stim_then_sim(self):
        stim_path = self.dir / "stim.json"
        trace_path = self.dir / "trace.json"
        self.call("stim", str(fixture_path("dff.v")), "--n", "7", "--seed", "3", "-o", str(stim_path))
        stimuli = json.loads(stim_path.read_text())
        self.assertEqual(stimuli["n"], 7)
        self.assertEqual(set(stimuli["columns"]), {"d"})

        self.call("sim", str(fixture_path("dff.v")), "--stimuli", str(stim_path), "--trace", str(trace_path))
        trace = json.loads(trace_path.read_text())
        d = stimuli["columns"]["d"]
        self.assertEqual(trace["outputs"]["q"], ["0"] + d[:-1])

    def test_stim_exhaustive(self):
        data = json.loads(self.call("stim", str(fixture_path("alu.v")), "--exhaustive"))
        self.assertEqual(data["n"], 1 << 10)
        self.assertTrue(data["exhaustive"])

    def test_lint(self):
        listing = self.dir / "valid.txt"
        out = self.call("lint", str(FIXTURES), "-o", str(listing))
        names = {Path(line).name for line in listing.read_text().splitlines()}
        self.assertEqual(names, {"alu.v", "counter.v", "dff.v", "fig1.v"})
        self.assertIn("4/5", out)


class EntryPointTests(SimpleTestCase):
    def test_global_flags_move_after_the_subcommand(self):
        from salvkit import split_argv

        self.assertEqual(
            split_argv(["--seed", "3", "--n=20", "build-prefs", "--reports", "r.jsonl"]),
            ["build_prefs", "--seed", "3", "--n=20", "--reports", "r.jsonl"],
        )
        self.assertEqual(split_argv(["dpo-check", "--batch", "b.json"]), ["dpo_check", "--batch", "b.json"])
        self.assertEqual(split_argv([]), [])

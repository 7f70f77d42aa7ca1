import os
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from rtl.services.parser import parse_module
from rtl.services.source import normalize_source, read_source
from rtl.services.stimulus import stimuli_for
from verification.services.verifier import (
    INTERFACE_MISMATCH,
    PARSE_ERROR,
    SIM_ERROR,
    SIMULATED,
    CandidateReport,
    ReferenceInvalid,
    candidate_files,
    check_candidate,
    read_candidates,
    read_reports,
    run_reference,
    verify_candidate,
    verify_prompt,
    write_reports,
)
from verification.tests import fixture_path

FULL = os.environ.get("SALVKIT_FULL_ACCEPTANCE") == "1"

XOR = "module m(input a, input b, output y); assign y = a ^ b; endmodule\n"


def src(text, origin="<inline>"):
    return normalize_source(text, origin)


class VerifyCandidateTests(SimpleTestCase):
    def test_xor_against_or(self):
        ref = src(XOR)
        stimuli = stimuli_for(parse_module(ref), 100, seed=0)
        report = verify_candidate(ref, src("module m(input a, input b, output y); assign y = a | b; endmodule"), stimuli)
        self.assertEqual(report.status, SIMULATED)
        (verdict,) = report.verdicts
        self.assertFalse(verdict.correct)
        self.assertIsNotNone(verdict.first_mismatch_cycle)
        a, b = stimuli.columns["a"], stimuli.columns["b"]
        expected = next(t for t in range(100) if (a[t] ^ b[t]) != (a[t] | b[t]))
        self.assertEqual(verdict.first_mismatch_cycle, expected)
        self.assertEqual(report.correct_set, frozenset())

    def test_identical_candidate_is_fully_correct(self):
        ref = read_source(fixture_path("fig1/ref.v"))
        stimuli = stimuli_for(parse_module(ref), 100, seed=3)
        report = verify_candidate(ref, read_source(fixture_path("fig1/cand_0.v")), stimuli)
        self.assertTrue(report.fully_correct)
        self.assertEqual(report.correct_set, frozenset({"a", "d"}))
        self.assertTrue(all(v.first_mismatch_cycle is None for v in report.verdicts))

    def test_partially_correct(self):
        ref = read_source(fixture_path("fig1/ref.v"))
        stimuli = stimuli_for(parse_module(ref), 100, seed=3)
        report = verify_candidate(ref, read_source(fixture_path("fig1/cand_1.v")), stimuli)
        self.assertEqual(report.correct_set, frozenset({"d"}))
        self.assertEqual(report.signals, ["a", "d"])
        self.assertFalse(report.fully_correct)

    def test_renamed_internal_wire_is_fine(self):
        ref = src(XOR)
        cand = src("module m(input a, input b, output y); wire t; assign t = a ^ b; assign y = t; endmodule")
        stimuli = stimuli_for(parse_module(ref), 50, seed=1)
        self.assertTrue(verify_candidate(ref, cand, stimuli).fully_correct)


class StatusTests(SimpleTestCase):
    def setUp(self):
        self.ref = run_reference(read_source(fixture_path("fig1/ref.v")), 100, seed=5)

    def check(self, name):
        return check_candidate(self.ref, read_source(fixture_path(f"fig1/{name}")), 0)

    def test_parse_error(self):
        report = self.check("cand_2.v")
        self.assertEqual(report.status, PARSE_ERROR)
        self.assertEqual(report.correct_set, frozenset())
        self.assertEqual(report.signals, ["a", "d"])
        self.assertFalse(any(v.correct for v in report.verdicts))

    def test_interface_mismatch(self):
        report = self.check("cand_3.v")
        self.assertEqual(report.status, INTERFACE_MISMATCH)
        self.assertEqual(report.correct_set, frozenset())

    def test_outside_subset_is_parse_error(self):
        report = check_candidate(
            self.ref,
            src(
                "module fig1(input [3:0] x, input [3:0] y, input [3:0] z, output [3:0] a, output [3:0] d);\n"
                "  initial $display(x);\n  assign a = x & y;\n  assign d = x | z;\nendmodule\n"
            ),
            0,
        )
        self.assertEqual(report.status, PARSE_ERROR)

    def test_sim_error(self):
        report = check_candidate(
            self.ref,
            src(
                "module fig1(input [3:0] x, input [3:0] y, input [3:0] z, output [3:0] a, output [3:0] d);\n"
                "  assign a = x & y;\n  assign d = ~d;\nendmodule\n"
            ),
            7,
        )
        self.assertEqual(report.status, SIM_ERROR)
        self.assertEqual(report.candidate_id, 7)
        self.assertEqual(report.correct_set, frozenset())

    def test_bad_reference(self):
        with self.assertRaises(ReferenceInvalid):
            run_reference(read_source(fixture_path("fig1/cand_2.v")), 10, seed=0)


class VerifyPromptTests(SimpleTestCase):
    def setUp(self):
        self.ref = read_source(fixture_path("fig1/ref.v"))
        self.cands = read_candidates(fixture_path("fig1"))

    def test_one_report_per_candidate(self):
        reports = verify_prompt(self.ref, self.cands, 100, seed=0)
        self.assertEqual([r.candidate_id for r in reports], [0, 1, 2, 3, 4])
        self.assertEqual(
            [r.status for r in reports],
            [SIMULATED, SIMULATED, PARSE_ERROR, INTERFACE_MISMATCH, SIMULATED],
        )
        self.assertEqual(
            [r.correct_set for r in reports],
            [frozenset({"a", "d"}), frozenset({"d"}), frozenset(), frozenset(), frozenset()],
        )

    def test_worker_count_does_not_change_reports(self):
        serial = verify_prompt(self.ref, self.cands, 100, seed=9, workers=1)
        parallel = verify_prompt(self.ref, self.cands, 100, seed=9, workers=3)
        self.assertEqual(serial, parallel)

    def test_more_stimuli_never_adds_correct_signals(self):
        small = verify_prompt(self.ref, self.cands, 5, seed=2)
        large = verify_prompt(self.ref, self.cands, 200, seed=2)
        for a, b in zip(small, large):
            self.assertLessEqual(b.correct_set, a.correct_set)

    def test_equivalent_rewrite_correct_for_every_seed(self):
        cand = src(
            "module fig1(input [3:0] x, input [3:0] y, input [3:0] z, output [3:0] a, output [3:0] d);\n"
            "  assign a = ~(~y | ~x);\n  assign d = z | x;\nendmodule\n"
        )
        for seed in range(50 if FULL else 5):
            with self.subTest(seed=seed):
                (report,) = verify_prompt(self.ref, [cand], 30, seed=seed)
                self.assertTrue(report.fully_correct)

    def test_exhaustive_is_sound(self):
        reports = verify_prompt(self.ref, self.cands, 1, seed=0, exhaustive=True)
        self.assertEqual(reports[0].correct_set, frozenset({"a", "d"}))
        self.assertEqual(reports[1].correct_set, frozenset({"d"}))
        # x varies slowest and z fastest, so y first differs from x at vector 16
        (verdict,) = [v for v in reports[1].verdicts if v.signal == "a"]
        self.assertEqual(verdict.first_mismatch_cycle, 16)


class ReportFileTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_report_json(self):
        ref = read_source(fixture_path("fig1/ref.v"))
        (report,) = verify_prompt(ref, [read_source(fixture_path("fig1/cand_1.v"))], 100, seed=0)
        data = report.to_json()
        self.assertEqual(set(data), {"candidate_id", "verdicts", "status", "correct_set"})
        self.assertEqual(data["correct_set"], ["d"])
        self.assertEqual(CandidateReport.from_json(data), report)

    def test_write_and_read(self):
        ref = read_source(fixture_path("fig1/ref.v"))
        reports = verify_prompt(ref, read_candidates(fixture_path("fig1")), 40, seed=4)
        path = self.dir / "reports.jsonl"
        self.assertEqual(write_reports(reports, path), 5)
        self.assertEqual(read_reports(path), reports)

    def test_unknown_status(self):
        with self.assertRaises(ValueError):
            CandidateReport.from_json({"candidate_id": 0, "verdicts": [], "status": "maybe", "correct_set": []})

    def test_candidate_files_natural_order(self):
        for name in ("cand_10.v", "cand_2.v", "cand_1.v", "ref.v", "notes.txt"):
            (self.dir / name).write_text("module m; endmodule\n")
        self.assertEqual([p.name for p in candidate_files(self.dir)], ["cand_1.v", "cand_2.v", "cand_10.v"])

    def test_candidate_files_fallback(self):
        for name in ("b.v", "a.v", "ref.v"):
            (self.dir / name).write_text("module m; endmodule\n")
        self.assertEqual([p.name for p in candidate_files(self.dir)], ["a.v", "b.v"])

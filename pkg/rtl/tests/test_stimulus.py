import os

from django.test import SimpleTestCase

from rtl.services.parser import parse_module, parse_text
from rtl.services.prng import SplitMix64, Xoshiro256StarStar, column_stream, fnv1a64
from rtl.services.source import read_source
from rtl.services.stimulus import (
    ExhaustiveTooLarge,
    PortClass,
    StimulusSet,
    classify_ports,
    exhaustive,
    generate,
    stimuli_for,
)
from rtl.tests import fixture_path

FULL = os.environ.get("SALVKIT_FULL_ACCEPTANCE") == "1"


class PrngTests(SimpleTestCase):
    def test_splitmix64_reference_output(self):
        self.assertEqual(SplitMix64(0).next(), 0xE220A8397B1DCDAF)

    def test_xoshiro_reference_outputs(self):
        gen = Xoshiro256StarStar([1, 2, 3, 4])
        self.assertEqual([gen.next() for _ in range(4)], [11520, 0, 1509978240, 1215971899390074240])

    def test_xoshiro_rejects_zero_state(self):
        with self.assertRaises(ValueError):
            Xoshiro256StarStar([0, 0, 0, 0])
        with self.assertRaises(ValueError):
            Xoshiro256StarStar([1, 2, 3])

    def test_bits_range(self):
        gen = Xoshiro256StarStar.from_seed(42)
        for width in (1, 7, 64):
            self.assertLess(gen.bits(width), 1 << width)
        with self.assertRaises(ValueError):
            gen.bits(0)

    def test_fnv1a64(self):
        self.assertEqual(fnv1a64(b""), 0xCBF29CE484222325)
        self.assertEqual(fnv1a64(b"a"), 0xAF63DC4C8601EC8C)

    def test_column_stream_keyed_by_name(self):
        a = column_stream(7, "a")
        b = column_stream(7, "b")
        self.assertNotEqual([a.next() for _ in range(4)], [b.next() for _ in range(4)])
        self.assertEqual(column_stream(7, "a").next(), column_stream(7, "a").next())


class ClassifyPortsTests(SimpleTestCase):
    def roles(self, text):
        return {pc.name: (pc.role, pc.reset_polarity) for pc in classify_ports(parse_text(text))}

    def test_clock_reset_data(self):
        roles = self.roles(
            "module m(input clk, input rst_n, input d, output reg q);"
            " always @(posedge clk or negedge rst_n) if (!rst_n) q <= 0; else q <= d; endmodule"
        )
        self.assertEqual(
            roles,
            {"clk": ("clock", None), "rst_n": ("reset", "active_low"), "d": ("data", None)},
        )

    def test_combinational_is_all_data(self):
        roles = self.roles("module m(input a, input b, output y); assign y = a & b; endmodule")
        self.assertEqual(roles, {"a": ("data", None), "b": ("data", None)})

    def test_no_substring_matches(self):
        roles = self.roles("module m(input clock_enable, input a, output y); assign y = a & clock_enable; endmodule")
        self.assertEqual(roles["clock_enable"], ("data", None))

    def test_edge_usage(self):
        roles = self.roles(
            "module m(input tick, input clear, input d, output reg q);"
            " always @(posedge tick or posedge clear) if (clear) q <= 0; else q <= d; endmodule"
        )
        self.assertEqual(roles["tick"], ("clock", None))
        self.assertEqual(roles["clear"], ("reset", "active_high"))
        self.assertEqual(roles["d"], ("data", None))

    def test_reset_names(self):
        roles = self.roles("module m(input reset, input aresetn, input a, output y); assign y = a; endmodule")
        self.assertEqual(roles["reset"], ("reset", "active_high"))
        # only the first reset is classified as one
        self.assertEqual(roles["aresetn"], ("data", None))

    def test_port_class_json(self):
        pc = PortClass("rst_n", 1, "reset", False)
        self.assertEqual(pc.to_json(), {"signal": "rst_n", "role": "reset", "width": 1, "polarity": "active_low"})
        self.assertEqual(PortClass.from_json(pc.to_json()), pc)


class GenerateTests(SimpleTestCase):
    def setUp(self):
        self.module = parse_module(read_source(fixture_path("counter.v")))
        self.classes = classify_ports(self.module)

    def test_deterministic(self):
        self.assertEqual(generate(self.classes, 50, 3), generate(self.classes, 50, 3))
        self.assertNotEqual(generate(self.classes, 50, 3).columns, generate(self.classes, 50, 4).columns)

    def test_reset_schedule_and_no_clock_column(self):
        stimuli = generate(self.classes, 6, 0)
        self.assertNotIn("clk", stimuli.columns)
        self.assertEqual(stimuli.columns["rst_n"], [0, 0, 1, 1, 1, 1])

    def test_widths(self):
        stimuli = generate(self.classes, 200, 1)
        self.assertTrue(all(0 <= v < 16 for v in stimuli.columns["step"]))
        self.assertTrue(all(v in (0, 1) for v in stimuli.columns["en"]))

    def test_port_order_independence(self):
        a = generate([PortClass("x", 4, "data"), PortClass("y", 8, "data")], 30, 9)
        b = generate([PortClass("y", 8, "data"), PortClass("x", 4, "data")], 30, 9)
        self.assertEqual(a.columns["x"], b.columns["x"])
        self.assertEqual(a.columns["y"], b.columns["y"])

    def test_prefix_property(self):
        short = generate(self.classes, 10, 2)
        long = generate(self.classes, 40, 2)
        for name, column in short.columns.items():
            self.assertEqual(long.columns[name][:10], column)

    def test_balanced_bits(self):
        n = 10_000
        ones = sum(generate([PortClass("a", 1, "data")], n, 12345).columns["a"])
        self.assertGreaterEqual(ones / n, 0.47)
        self.assertLessEqual(ones / n, 0.53)

    def test_coverage_floor(self):
        seeds = range(100) if FULL else range(10)
        for seed in seeds:
            column = generate([PortClass("v", 4, "data")], 64 * 16, seed).columns["v"]
            self.assertEqual(set(column), set(range(16)), seed)

    def test_n_must_be_positive(self):
        with self.assertRaises(ValueError):
            generate(self.classes, 0, 0)

    def test_json(self):
        stimuli = generate(self.classes, 5, 2**64 - 1)
        data = stimuli.to_json()
        self.assertEqual(data["seed"], 2**64 - 1)
        self.assertNotIn("exhaustive", data)
        self.assertTrue(all(isinstance(v, str) for v in data["columns"]["step"]))
        self.assertEqual(StimulusSet.from_json(data), stimuli)


class ExhaustiveTests(SimpleTestCase):
    def test_enumerates_first_port_slowest(self):
        classes = [PortClass("a", 1, "data"), PortClass("b", 2, "data")]
        stimuli = exhaustive(classes)
        self.assertEqual(stimuli.n, 8)
        self.assertEqual(stimuli.columns["a"], [0, 0, 0, 0, 1, 1, 1, 1])
        self.assertEqual(stimuli.columns["b"], [0, 1, 2, 3, 0, 1, 2, 3])
        self.assertTrue(stimuli.exhaustive)

    def test_reset_keeps_schedule(self):
        classes = [PortClass("rst", 1, "reset", True), PortClass("a", 2, "data")]
        stimuli = exhaustive(classes)
        self.assertEqual(stimuli.columns["rst"], [1, 1, 0, 0])

    def test_too_large(self):
        with self.assertRaises(ExhaustiveTooLarge):
            exhaustive([PortClass("a", 16, "data"), PortClass("b", 8, "data")])

    def test_stimuli_for(self):
        m = parse_module(read_source(fixture_path("fig1.v")))
        stimuli = stimuli_for(m, 10, 0, use_exhaustive=True)
        self.assertEqual(stimuli.n, 1 << 12)
        self.assertEqual(stimuli_for(m, 10, 0).n, 10)

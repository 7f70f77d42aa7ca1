import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase, override_settings

from pipeline.services.config import ConfigError, PipelineConfig, load_config_file, resolve_config
from preferences.services.pairs import DatasetMode


@override_settings(SALVKIT_N_STIMULI=100, SALVKIT_SEED=0, SALVKIT_WORKERS=1, SALVKIT_BETA=0.1)
class ResolveConfigTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def write(self, data):
        path = self.dir / "salvkit.json"
        path.write_text(json.dumps(data) if not isinstance(data, str) else data)
        return str(path)

    def test_settings_defaults(self):
        config = resolve_config(corpus="corpus", output="out")
        self.assertEqual(config.n_stimuli, 100)
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.beta, 0.1)
        self.assertEqual(config.mode, DatasetMode(True, True, True))
        self.assertIsNone(config.pair_cap)
        self.assertFalse(config.exhaustive)

    @override_settings(SALVKIT_N_STIMULI=250, SALVKIT_SEED=42)
    def test_settings_come_from_the_environment_layer(self):
        config = resolve_config(corpus="corpus", output="out")
        self.assertEqual((config.n_stimuli, config.seed), (250, 42))

    @override_settings(SALVKIT_WORKERS=5, SALVKIT_N_STIMULI=30, SALVKIT_BETA=0.25)
    def test_direct_construction_matches_resolved_defaults(self):
        direct = PipelineConfig(corpus="corpus", output="out")
        resolved = resolve_config(corpus="corpus", output="out")
        self.assertEqual((direct.workers, direct.n_stimuli, direct.beta), (5, 30, 0.25))
        self.assertEqual(direct, resolved)

    def test_file_then_flags(self):
        path = self.write({"n_stimuli": 20, "seed": 7, "mode": "partial", "corpus": "c", "output": "o"})
        config = resolve_config(path, seed=9, filter_incorrect_signals=False)
        self.assertEqual(config.n_stimuli, 20)
        self.assertEqual(config.seed, 9)
        self.assertEqual(config.mode, DatasetMode(False, True, False))
        self.assertEqual(config.corpus, "c")

    def test_none_overrides_are_ignored(self):
        path = self.write({"n_stimuli": 20, "corpus": "c", "output": "o"})
        self.assertEqual(resolve_config(path, n_stimuli=None).n_stimuli, 20)

    def test_string_numbers_are_coerced(self):
        config = resolve_config(corpus="c", output="o", n_stimuli="12", beta="0.5")
        self.assertEqual((config.n_stimuli, config.beta), (12, 0.5))

    def test_rejects(self):
        cases = [
            {"n_stimuli": 0},
            {"workers": 0},
            {"pair_cap": 0},
            {"beta": 0.0},
            {"seed": -1},
            {"seed": 1 << 64},
            {"mode": "everything"},
            {"n_stimuli": "many"},
            {"n_stimuli": True},
            {"exhaustive": "yes"},
        ]
        for overrides in cases:
            with self.subTest(overrides=overrides):
                with self.assertRaises(ConfigError):
                    resolve_config(corpus="c", output="o", **overrides)

    def test_needs_corpus_and_output(self):
        with self.assertRaises(ConfigError):
            resolve_config(output="o")
        with self.assertRaises(ConfigError):
            resolve_config(corpus="c")
        self.assertEqual(resolve_config(manifest="index.json", output="o").manifest, "index.json")

    def test_bad_files(self):
        with self.assertRaisesRegex(ConfigError, "unknown config key"):
            load_config_file(self.write({"n_stimuli": 5, "colour": "blue"}))
        with self.assertRaisesRegex(ConfigError, "not valid JSON"):
            load_config_file(self.write("{"))
        with self.assertRaisesRegex(ConfigError, "one flat JSON object"):
            load_config_file(self.write([1, 2]))
        with self.assertRaises(ConfigError):
            load_config_file(self.dir / "missing.json")

    def test_unknown_override(self):
        with self.assertRaises(ConfigError):
            resolve_config(corpus="c", output="o", colour="blue")

    def test_hashed_snapshot(self):
        a = resolve_config(corpus="c", output="o1", workers=1)
        b = resolve_config(corpus="c", output="o2", workers=8)
        self.assertEqual(a.hashed_json(), b.hashed_json())
        self.assertNotIn("workers", a.hashed_json())
        self.assertNotEqual(a.hashed_json(), resolve_config(corpus="c", output="o", seed=1).hashed_json())
        self.assertEqual(a.to_json()["mode"], "complete+partial")

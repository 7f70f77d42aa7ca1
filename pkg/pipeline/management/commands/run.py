from django.core.management.base import CommandError

from pipeline.services.config import resolve_config
from pipeline.services.orchestrator import run_pipeline
from pipeline.services.runlog import RunLog
from preferences.services.pairs import MODE_SPELLINGS
from rtl.management.base import SalvkitCommand


class Command(SalvkitCommand):
    help = "Run verify -> build pairs over a whole corpus and write prefs.jsonl, reports/ and manifest.json."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--corpus", default=None, help="Directory of <prompt_id>/ref.v folders.")
        parser.add_argument("--candidates", default=None, help="Separate <prompt_id>/cand_*.v tree.")
        parser.add_argument("--manifest", default=None, help="JSON corpus index instead of --corpus.")
        parser.add_argument("-o", "--output", default=None, help="Output directory.")
        parser.add_argument("--mode", default=None, choices=sorted(MODE_SPELLINGS))
        parser.add_argument(
            "--filter-incorrect-signals", dest="filter_incorrect_signals", action="store_true", default=None
        )
        parser.add_argument("--no-filter-incorrect-signals", dest="filter_incorrect_signals", action="store_false")
        parser.add_argument("--beta", type=float, default=None, help="Recorded in the manifest for training.")
        parser.add_argument("--cap", type=int, default=None, help="Pair cap per prompt.")
        parser.add_argument("--exhaustive", action="store_true", default=None)
        parser.add_argument("--no-db", action="store_true", help="Do not record the run in the database.")

    def _echo(self, level: str, message: str):
        style = {
            "error": self.style.ERROR,
            "warning": self.style.WARNING,
        }.get(level)
        if level == "debug" and self.verbosity < 2:
            return
        self.stdout.write(style(message) if style else message)

    def handle(self, *args, **options):
        self.verbosity = options.get("verbosity", 1)
        with self.toolkit_errors():
            config = resolve_config(
                options["config"],
                corpus=options["corpus"],
                candidates=options["candidates"],
                manifest=options["manifest"],
                output=options["output"],
                n_stimuli=options["n"],
                seed=options["seed"],
                workers=options["workers"],
                mode=options["mode"],
                filter_incorrect_signals=options["filter_incorrect_signals"],
                beta=options["beta"],
                pair_cap=options["cap"],
                exhaustive=options["exhaustive"],
            )
            run_log = None if options["no_db"] else RunLog(echo=self._echo)
            manifest = run_pipeline(config, run_log)

        totals = manifest.totals
        if run_log is None:
            self.stdout.write(
                f"{totals['succeeded']}/{totals['prompts']} prompt(s) succeeded, {totals['pairs']} pair(s)"
            )
        if totals["succeeded"] == 0:
            raise CommandError("no prompt succeeded", returncode=2)
        self.stdout.write(self.style.SUCCESS(f"Output in {config.output} (hash {manifest.content_hash})"))

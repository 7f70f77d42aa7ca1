from django.core.management.base import CommandError

from preferences.services.pairs import MODE_SPELLINGS, DatasetMode, build_pairs, check_pair, summarize_pairs
from preferences.services.records import emit_records
from rtl.management.base import SalvkitCommand
from rtl.services.parser import parse_module
from rtl.services.source import read_source
from verification.services.verifier import read_candidates, read_reports


class Command(SalvkitCommand):
    help = "Build signal-masked preference pairs from verification reports."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--reports", required=True, help="reports.jsonl from `verify`.")
        parser.add_argument("--cands", required=True, help="The candidate directory the reports were made from.")
        parser.add_argument("--ref", default=None, help="Reference file; its outputs define full correctness.")
        parser.add_argument("--prompt-id", default="", help="Prompt id stored in every record.")
        parser.add_argument("--mode", default="complete+partial", choices=sorted(MODE_SPELLINGS))
        parser.add_argument(
            "--filter-incorrect-signals",
            dest="filter_incorrect_signals",
            action="store_true",
            default=True,
            help="Mask the slices of the contrast signals (default).",
        )
        parser.add_argument(
            "--no-filter-incorrect-signals",
            dest="filter_incorrect_signals",
            action="store_false",
            help="Mask the whole module body.",
        )
        parser.add_argument("--cap", type=int, default=None, help="Stop after this many pairs.")
        parser.add_argument("--check", action="store_true", help="Validate every pair before writing.")
        parser.add_argument("-o", "--output", required=True, help="prefs.jsonl")

    def handle(self, *args, **options):
        try:
            mode = DatasetMode.parse(options["mode"], options["filter_incorrect_signals"])
        except ValueError as e:
            raise CommandError(str(e), returncode=1)

        with self.toolkit_errors():
            try:
                reports = read_reports(options["reports"])
            except (ValueError, KeyError) as e:
                raise CommandError(f"bad report file {options['reports']}: {e}", returncode=1) from e
            sources = read_candidates(options["cands"])
            if len(sources) != len(reports):
                raise CommandError(
                    f"{len(reports)} report(s) but {len(sources)} candidate file(s) in {options['cands']}",
                    returncode=1,
                )
            outputs = None
            if options["ref"]:
                outputs = [p.name for p in parse_module(read_source(options["ref"])).outputs]
            try:
                pairs = build_pairs(
                    reports, sources, mode, options["cap"], prompt_id=options["prompt_id"], outputs=outputs
                )
            except ValueError as e:
                raise CommandError(str(e), returncode=1) from e

            if options["check"]:
                problems = [
                    f"pair ({p.w_id}, {p.l_id}): {problem}" for p in pairs for problem in check_pair(p, reports)
                ]
                if problems:
                    for line in problems:
                        self.stderr.write(line)
                    raise CommandError(f"{len(problems)} invalid pair(s)", returncode=1)

            count = emit_records(pairs, options["output"])

        summary = summarize_pairs(pairs)
        self.stdout.write(
            self.style.SUCCESS(
                f"{count} pair(s) written to {options['output']} "
                f"({summary['complete']} complete, {summary['partial']} partial)"
            )
        )

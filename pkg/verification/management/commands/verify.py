from django.conf import settings
from django.core.management.base import CommandError

from rtl.management.base import SalvkitCommand
from rtl.services.source import read_source
from rtl.services.timing import StageTimer
from verification.services.verifier import (
    ReferenceInvalid,
    candidate_files,
    verify_prompt,
    write_reports,
)


class Command(SalvkitCommand):
    help = "Verify every candidate against a reference, signal by signal."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--ref", required=True, help="Reference Verilog file.")
        parser.add_argument("--cands", required=True, help="Directory of candidate .v files.")
        parser.add_argument("--exhaustive", action="store_true", help="Enumerate every data input combination.")
        parser.add_argument("-o", "--output", default=None, help="reports.jsonl (default: stdout).")

    def handle(self, *args, **options):
        globals_ = self.global_options(options)
        timer = StageTimer()
        with self.toolkit_errors():
            reference = read_source(options["ref"])
            paths = candidate_files(options["cands"])
            if not paths:
                raise CommandError(f"no candidate .v files in {options['cands']}", returncode=1)
            candidates = [read_source(p) for p in paths]
            try:
                reports = verify_prompt(
                    reference,
                    candidates,
                    globals_["n"],
                    globals_["seed"],
                    exhaustive=options["exhaustive"],
                    max_bits=settings.SALVKIT_EXHAUSTIVE_MAX_BITS,
                    workers=globals_["workers"],
                    timer=timer,
                )
            except ReferenceInvalid as e:
                raise CommandError(f"reference is not usable: {e}", returncode=1) from e

            if options["output"]:
                write_reports(reports, options["output"])
            else:
                for report in reports:
                    self.stdout.write(report.dumps())

        full = sum(r.fully_correct for r in reports)
        summary = f"{len(reports)} candidate(s): {full} fully correct"
        if options["output"]:
            self.stdout.write(self.style.SUCCESS(f"{summary}, reports in {options['output']}"))
        else:
            self.stderr.write(summary)

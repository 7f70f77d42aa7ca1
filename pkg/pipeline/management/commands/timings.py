from django.core.management.base import CommandError

from pipeline.services.manifest import RunManifest, format_timings, stage_timings
from rtl.management.base import SalvkitCommand


class Command(SalvkitCommand):
    help = "Print mean seconds per sample for each pipeline stage of a finished run."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("manifest", help="manifest.json written by `run`.")
        parser.add_argument("--json", action="store_true")

    def handle(self, *args, **options):
        with self.toolkit_errors():
            try:
                manifest = RunManifest.load(options["manifest"])
            except (ValueError, KeyError) as e:
                raise CommandError(f"bad manifest {options['manifest']}: {e}", returncode=1) from e
        rows = stage_timings(manifest)
        if options["json"]:
            self.emit_json({stage: mean for stage, mean in rows})
        else:
            self.stdout.write(format_timings(rows))
            self.stdout.write(f"wall clock: {manifest.wall_clock_seconds:.3f} s")

from django.conf import settings

from rtl.management.base import SalvkitCommand
from rtl.services.parser import parse_module
from rtl.services.source import read_source
from rtl.services.stimulus import stimuli_for


class Command(SalvkitCommand):
    help = "Classify a module's ports and generate a seeded stimulus set."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("file", help="Verilog source (.v)")
        parser.add_argument("--exhaustive", action="store_true", help="Every data input combination.")
        parser.add_argument("-o", "--output", default=None, help="Stimulus JSON file (default: stdout).")

    def handle(self, *args, **options):
        globals_ = self.global_options(options)
        with self.toolkit_errors():
            module = parse_module(read_source(options["file"]))
            stimuli = stimuli_for(
                module,
                globals_["n"],
                globals_["seed"],
                use_exhaustive=options["exhaustive"],
                max_bits=settings.SALVKIT_EXHAUSTIVE_MAX_BITS,
            )
        self.emit_json(stimuli.to_json(), options["output"])
        if options["output"]:
            roles = ", ".join(f"{pc.name}={pc.role}" for pc in stimuli.classes)
            self.stdout.write(self.style.SUCCESS(f"{stimuli.n} vector(s) written to {options['output']} ({roles})"))

import json

from django.core.management.base import CommandError

from rtl.management.base import SalvkitCommand
from rtl.services.parser import parse_module
from rtl.services.simulator import simulate
from rtl.services.source import read_source
from rtl.services.stimulus import StimulusSet, stimuli_for
from rtl.services.subset import supported_subset_check


class Command(SalvkitCommand):
    help = "Simulate a module on a stimulus set and write its output trace."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("file", help="Verilog source (.v)")
        parser.add_argument("--stimuli", default=None, help="Stimulus JSON (default: generate from --n/--seed).")
        parser.add_argument("--trace", default=None, help="Trace JSON file (default: stdout).")

    def handle(self, *args, **options):
        with self.toolkit_errors():
            module = parse_module(read_source(options["file"]))
        diagnostics = supported_subset_check(module)
        if diagnostics:
            for d in diagnostics:
                self.stderr.write(d.format())
            raise CommandError(f"{module.name} is outside the simulated subset", returncode=1)

        with self.toolkit_errors():
            if options["stimuli"]:
                try:
                    with open(options["stimuli"], "r", encoding="utf-8") as f:
                        stimuli = StimulusSet.from_json(json.load(f))
                except (ValueError, KeyError) as e:
                    raise CommandError(f"bad stimulus file {options['stimuli']}: {e}", returncode=1)
            else:
                globals_ = self.global_options(options)
                stimuli = stimuli_for(module, globals_["n"], globals_["seed"])
            trace = simulate(module, stimuli)
        self.emit_json(trace.to_json(), options["trace"])

from rtl.management.base import SalvkitCommand
from rtl.services.parser import parse_module
from rtl.services.siggraph import build_graph, extract_slice
from rtl.services.source import read_source


class Command(SalvkitCommand):
    help = "Extract the standalone slice implementing one or more output signals."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("file", help="Verilog source (.v)")
        parser.add_argument(
            "--signal", action="append", default=[], dest="signals",
            help="Output port to keep (repeatable). Default: every output.",
        )
        parser.add_argument("--graph", action="store_true", help="Print the signal graph instead.")
        parser.add_argument("--json", action="store_true", help="Print spans and slice text as JSON.")
        parser.add_argument("-o", "--output", default=None, help="Write to this file instead of stdout.")

    def handle(self, *args, **options):
        with self.toolkit_errors():
            module = parse_module(read_source(options["file"]))
            graph = build_graph(module)
            if options["graph"]:
                self.emit_json(graph.to_json(), options["output"])
                return
            targets = options["signals"] or [p.name for p in module.outputs]
            result = extract_slice(module, graph, targets)

        if options["json"]:
            self.emit_json(
                {
                    "targets": sorted(result.targets),
                    "kept_signals": sorted(result.kept_signals),
                    "spans": result.spans_json(),
                    "text": result.text,
                },
                options["output"],
            )
        else:
            self.emit(result.text, options["output"])

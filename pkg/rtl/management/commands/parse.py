import json

from django.core.management.base import CommandError

from rtl.management.base import SalvkitCommand
from rtl.services import ast
from rtl.services.errors import FrontendError
from rtl.services.parser import parse_module
from rtl.services.source import read_source
from rtl.services.subset import supported_subset_check


def module_summary(module: ast.ModuleAst) -> dict:
    items = []
    for item in module.items:
        if isinstance(item, ast.ContinuousAssign):
            items.append({"kind": "assign", "targets": sorted(ast.item_targets(item))})
        else:
            sens = "*" if item.sens.star else ", ".join(
                f"{e.edge + ' ' if e.edge else ''}{e.name}" for e in item.sens.entries
            )
            items.append({"kind": "always", "sensitivity": sens, "targets": sorted(ast.item_targets(item))})
    return {
        "module": module.name,
        "ports": [
            {"name": p.name, "direction": p.direction, "width": p.width, "kind": p.kind} for p in module.ports
        ],
        "params": [{"name": p.name, "value": p.value, "local": p.local} for p in module.params],
        "decls": [
            {"kind": d.kind, "width": d.width, "names": list(d.names)} for d in module.decls
        ],
        "items": items,
    }


class Command(SalvkitCommand):
    help = "Parse one Verilog file and print a module summary or its diagnostics."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("file", help="Verilog source (.v)")
        parser.add_argument("--json", action="store_true", help="Print the summary as JSON.")

    def handle(self, *args, **options):
        with self.toolkit_errors():
            source = read_source(options["file"])
        try:
            module = parse_module(source)
        except FrontendError as e:
            if options["json"]:
                self.stdout.write(json.dumps({"diagnostics": [e.diagnostic().to_json()]}, indent=2))
            raise CommandError(str(e), returncode=1)

        diagnostics = supported_subset_check(module)
        summary = module_summary(module)
        if options["json"]:
            summary["diagnostics"] = [d.to_json() for d in diagnostics]
            self.emit_json(summary)
        else:
            self.stdout.write(f"module {summary['module']}")
            for p in summary["ports"]:
                self.stdout.write(f"  {p['direction']:<6} {p['kind']:<4} [{p['width']:>2}] {p['name']}")
            for d in summary["decls"]:
                self.stdout.write(f"  {d['kind']:<11} [{d['width']:>2}] {', '.join(d['names'])}")
            for item in summary["items"]:
                where = f" @({item['sensitivity']})" if item["kind"] == "always" else ""
                self.stdout.write(f"  {item['kind']}{where} -> {', '.join(item['targets'])}")
            for d in diagnostics:
                self.stderr.write(d.format())

        if diagnostics:
            raise CommandError(f"{len(diagnostics)} subset diagnostic(s)", returncode=1)

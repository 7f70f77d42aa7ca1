from pathlib import Path

from django.core.management.base import CommandError

from rtl.management.base import SalvkitCommand
from rtl.services.errors import FrontendError
from rtl.services.parser import parse_module
from rtl.services.source import read_source
from rtl.services.subset import supported_subset_check


class Command(SalvkitCommand):
    help = "Check every .v file under a directory and list the ones inside the supported subset."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("directory", help="Directory to scan recursively.")
        parser.add_argument("-o", "--output", default=None, help="Write the list of clean files here.")

    def handle(self, *args, **options):
        root = Path(options["directory"])
        if not root.is_dir():
            raise CommandError(f"{root} is not a directory", returncode=1)

        clean = []
        files = sorted(root.rglob("*.v"))
        for path in files:
            try:
                module = parse_module(read_source(path))
            except FrontendError as e:
                self.stderr.write(str(e))
                continue
            diagnostics = supported_subset_check(module)
            for d in diagnostics:
                self.stderr.write(d.format())
            if not diagnostics:
                clean.append(str(path))

        if options["output"]:
            self.emit("".join(f"{p}\n" for p in clean), options["output"])
        self.stdout.write(
            self.style.SUCCESS(f"{len(clean)}/{len(files)} file(s) parse and pass the subset check.")
        )

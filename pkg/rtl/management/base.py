"""
Shared base for salvkit management commands.

Adds the global flags (--seed, --n, --workers, --config), makes argument
errors exit with status 1, and turns toolkit errors into CommandError.
"""

import json
import sys
from contextlib import contextmanager
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from rtl.services.errors import SalvkitError


class SalvkitCommand(BaseCommand):
    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        def error(message):
            if getattr(self, "_called_from_command_line", False):
                parser.print_usage(sys.stderr)
                sys.stderr.write(f"{parser.prog}: error: {message}\n")
                sys.exit(1)
            raise CommandError(f"Error: {message}", returncode=1)

        parser.error = error
        return parser

    def add_arguments(self, parser):
        group = parser.add_argument_group("global options")
        group.add_argument("--seed", type=int, default=None, help="Stimulus seed (64-bit).")
        group.add_argument("--n", type=int, default=None, help="Number of stimulus vectors.")
        group.add_argument("--workers", type=int, default=None, help="Worker processes.")
        group.add_argument("--config", default=None, help="Flat JSON config file.")

    # -----------------------------
    # Helpers
    # -----------------------------
    def global_options(self, options) -> dict:
        """n / seed / workers from settings, then --config, then flags."""
        from pipeline.services.config import load_config_file

        values = {
            "n": settings.SALVKIT_N_STIMULI,
            "seed": settings.SALVKIT_SEED,
            "workers": settings.SALVKIT_WORKERS,
        }
        if options.get("config"):
            with self.toolkit_errors():
                data = load_config_file(options["config"])
            for key, name in (("n_stimuli", "n"), ("seed", "seed"), ("workers", "workers")):
                if data.get(key) is not None:
                    values[name] = int(data[key])
        for name in ("n", "seed", "workers"):
            if options.get(name) is not None:
                values[name] = options[name]
        if values["n"] < 1 or values["workers"] < 1:
            raise CommandError("--n and --workers must be at least 1", returncode=1)
        return values

    @contextmanager
    def toolkit_errors(self, returncode: int = 1):
        try:
            yield
        except SalvkitError as e:
            raise CommandError(str(e), returncode=returncode) from e
        except OSError as e:
            raise CommandError(f"{e.filename or ''}: {e.strerror or e}", returncode=returncode) from e

    def emit(self, text: str, output=None):
        """Write to a file when -o is given, else to stdout."""
        if output:
            Path(output).write_text(text, encoding="utf-8", newline="\n")
        else:
            self.stdout.write(text, ending="" if text.endswith("\n") else "\n")

    def emit_json(self, data, output=None):
        self.emit(json.dumps(data, indent=2) + "\n", output)

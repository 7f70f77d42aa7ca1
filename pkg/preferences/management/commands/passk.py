import json

from django.core.management.base import CommandError

from preferences.services.dpomath import mean_pass_at_k, pass_at_k
from rtl.management.base import SalvkitCommand


class Command(SalvkitCommand):
    help = "Unbiased pass@k, for one problem (--n/--c/--k) or averaged over a results file."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--c", type=int, default=None, help="Number of correct samples.")
        parser.add_argument("--k", type=int, nargs="+", required=True)
        parser.add_argument("--results", default=None, help='JSONL, one {"n": .., "c": ..} per problem.')

    def _results(self, path) -> list:
        results = []
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    results.append((int(row["n"]), int(row["c"])))
                except (ValueError, KeyError, TypeError) as e:
                    raise CommandError(f"{path}:{lineno}: {e}", returncode=1) from e
        return results

    def handle(self, *args, **options):
        with self.toolkit_errors():
            if options["results"]:
                results = self._results(options["results"])
                for k in options["k"]:
                    self.stdout.write(f"pass@{k}: {mean_pass_at_k(results, k):.12g}")
                return

            if options["n"] is None or options["c"] is None:
                raise CommandError("give --n and --c, or --results", returncode=1)
            for k in options["k"]:
                value = pass_at_k(options["n"], options["c"], k)
                if len(options["k"]) == 1:
                    self.stdout.write(f"{value:.12g}")
                else:
                    self.stdout.write(f"pass@{k}: {value:.12g}")

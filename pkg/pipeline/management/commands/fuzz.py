from django.core.management.base import CommandError

from pipeline.services.fuzz import write_corpus
from rtl.management.base import SalvkitCommand


class Command(SalvkitCommand):
    help = "Write a seeded corpus of random subset modules, each with mutated candidates."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--count", type=int, required=True, help="Number of prompts.")
        parser.add_argument("--candidates", type=int, default=4, help="Candidates per prompt.")
        parser.add_argument("-o", "--output", required=True, help="Corpus directory.")

    def handle(self, *args, **options):
        if options["count"] < 1 or options["candidates"] < 1:
            raise CommandError("--count and --candidates must be at least 1", returncode=1)
        seed = self.global_options(options)["seed"]
        with self.toolkit_errors():
            ids = write_corpus(options["output"], options["count"], options["candidates"], seed)
        self.stdout.write(
            self.style.SUCCESS(f"{len(ids)} prompt(s) written to {options['output']} (seed {seed})")
        )

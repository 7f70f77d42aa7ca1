#!/usr/bin/env python
"""
salvkit command-line entry point.

    salvkit [--seed S] [--n N] [--workers W] [--config F] <subcommand> [args]

Subcommands are Django management commands; the dashed spellings
(build-prefs, dpo-check) map to their module names.
"""
import os
import sys

ALIASES = {
    "build-prefs": "build_prefs",
    "dpo-check": "dpo_check",
}

# Global flags that take a value and may come before the subcommand.
GLOBAL_FLAGS = ("--seed", "--n", "--workers", "--config")


def split_argv(argv: list) -> list:
    """Move leading global flags after the subcommand and resolve aliases."""
    leading = []
    rest = list(argv)
    while rest and rest[0].split("=", 1)[0] in GLOBAL_FLAGS:
        flag = rest.pop(0)
        leading.append(flag)
        if "=" not in flag and rest:
            leading.append(rest.pop(0))
    if not rest:
        return leading
    command = ALIASES.get(rest[0], rest[0])
    return [command] + leading + rest[1:]


def main(argv=None, prog="salvkit"):
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable?"
        ) from exc
    argv = split_argv(sys.argv[1:] if argv is None else argv)
    execute_from_command_line([prog] + (argv or ["help"]))


if __name__ == "__main__":
    main()

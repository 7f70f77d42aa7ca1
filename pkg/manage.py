#!/usr/bin/env python
"""
Django administrative entry point: migrate, test, createsuperuser and the
admin server for browsing pipeline run logs.

Toolkit subcommands work here as well; see salvkit.py.
"""
import sys

from salvkit import main

if __name__ == "__main__":
    main(sys.argv[1:], prog="manage.py")

#!/usr/bin/env python3
"""
Environment check for salvkit.
Verifies the interpreter, the installed packages and the settings before a run.
"""

import importlib
import os
import sys
from pathlib import Path

REQUIRED_PACKAGES = [
    ("django", "Django"),
    ("environ", "django-environ"),
    ("ply", "ply"),
    ("networkx", "networkx"),
    ("numpy", "numpy"),
]

ROOT = Path(__file__).resolve().parent.parent


def check_python_version():
    """Check Python version"""
    version = sys.version_info
    if version < (3, 11):
        print("❌ Python 3.11+ required")
        print(f"   Current version: {version.major}.{version.minor}.{version.micro}")
        return False
    print(f"✓ Python version: {version.major}.{version.minor}.{version.micro}")
    return True


def check_dependencies():
    """Check if required packages are installed"""
    print("\nChecking dependencies...")

    missing = []
    for module, dist in REQUIRED_PACKAGES:
        try:
            mod = importlib.import_module(module)
        except ImportError:
            print(f"❌ {dist} not installed")
            missing.append(dist)
            continue
        print(f"✓ {dist} installed (version {getattr(mod, '__version__', '?')})")

    if missing:
        print("\n   Install with: pip install -r requirements.txt")
        return False
    return True


def check_settings():
    """Load Django settings and show the salvkit defaults"""
    print("\nChecking settings...")

    sys.path.insert(0, str(ROOT))
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")
    try:
        import django
        from django.conf import settings

        django.setup()
    except Exception as e:
        print(f"❌ Settings failed to load: {e}")
        return False

    for name in ("SALVKIT_N_STIMULI", "SALVKIT_SEED", "SALVKIT_WORKERS", "SALVKIT_BETA", "SALVKIT_MAX_SWEEPS"):
        print(f"✓ {name} = {getattr(settings, name)}")
    if settings.SALVKIT_WORKERS < 1:
        print("❌ SALVKIT_WORKERS must be at least 1")
        return False
    return True


def print_next_steps(all_checks_passed):
    """Print next steps based on check results"""
    print("\n" + "=" * 70)

    if all_checks_passed:
        print("✅ ALL CHECKS PASSED")
        print("=" * 70)
        print("\nNext steps:")
        print("  1. Create the run-log tables:")
        print("     python manage.py migrate")
        print("  2. Try a small fuzz corpus:")
        print("     ./salvkit.py fuzz --count 20 --candidates 4 -o corpus/")
        print("     ./salvkit.py run --corpus corpus/ -o out/")
    else:
        print("❌ SOME CHECKS FAILED - Please fix issues above")
        print("=" * 70)


def main():
    """Run all checks"""
    print("=" * 70)
    print("SALVKIT - Environment Check")
    print("=" * 70)

    checks = [("Python version", check_python_version()), ("Dependencies", check_dependencies())]
    if checks[-1][1]:
        checks.append(("Settings", check_settings()))

    all_passed = all(result for _, result in checks)
    print_next_steps(all_passed)

    return 0 if all_passed else 1


if __name__ == "__main__":
    sys.exit(main())

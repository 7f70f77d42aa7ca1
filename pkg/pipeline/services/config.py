"""
Pipeline configuration.

Resolved in three layers: settings defaults (environment via django-environ),
then a flat JSON config file, then CLI flags of the same names.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

from django.conf import settings

from preferences.services.pairs import DatasetMode
from rtl.services.errors import SalvkitError
from rtl.services.prng import MASK64

logger = logging.getLogger(__name__)


class ConfigError(SalvkitError):
    pass


class CorpusLayoutError(SalvkitError):
    pass


INT_FIELDS = ("n_stimuli", "seed", "workers", "pair_cap")
FLOAT_FIELDS = ("beta",)
BOOL_FIELDS = ("filter_incorrect_signals", "exhaustive")
PATH_FIELDS = ("corpus", "candidates", "output", "manifest")
CONFIG_FIELDS = INT_FIELDS + FLOAT_FIELDS + BOOL_FIELDS + PATH_FIELDS + ("mode",)

# Left out of the hashed config snapshot: they change where or how fast a
# run happens, never what it produces.
UNHASHED_FIELDS = ("workers", "output")


@dataclass(frozen=True)
class PipelineConfig:
    corpus: Optional[str] = None
    output: Optional[str] = None
    candidates: Optional[str] = None
    manifest: Optional[str] = None  # JSON corpus index, alternative to the directory layout
    n_stimuli: int = field(default_factory=lambda: settings.SALVKIT_N_STIMULI)
    seed: int = field(default_factory=lambda: settings.SALVKIT_SEED)
    workers: int = field(default_factory=lambda: settings.SALVKIT_WORKERS)
    mode: DatasetMode = field(default_factory=DatasetMode)
    beta: float = field(default_factory=lambda: settings.SALVKIT_BETA)
    pair_cap: Optional[int] = None
    exhaustive: bool = False

    def validate(self) -> "PipelineConfig":
        for name in ("n_stimuli", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.pair_cap is not None and self.pair_cap < 1:
            raise ConfigError(f"pair_cap must be at least 1, got {self.pair_cap}")
        if not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.output:
            raise ConfigError("no output directory given")
        if not (self.corpus or self.manifest):
            raise ConfigError("no corpus directory or corpus manifest given")
        return self

    def to_json(self) -> dict:
        return {
            "corpus": self.corpus,
            "candidates": self.candidates,
            "manifest": self.manifest,
            "output": self.output,
            "n_stimuli": self.n_stimuli,
            "seed": self.seed,
            "workers": self.workers,
            "mode": self.mode.spelling,
            "filter_incorrect_signals": self.mode.filter_incorrect_signals,
            "beta": self.beta,
            "pair_cap": self.pair_cap,
            "exhaustive": self.exhaustive,
        }

    def hashed_json(self) -> dict:
        return {k: v for k, v in self.to_json().items() if k not in UNHASHED_FIELDS}


def _coerce(key: str, value):
    if value is None:
        if key in ("pair_cap",) + PATH_FIELDS:
            return None
        raise ConfigError(f"'{key}' may not be null")
    if key in INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise ConfigError(f"'{key}' must be an integer, got {value!r}")
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"'{key}' must be an integer, got {value!r}") from None
    if key in FLOAT_FIELDS:
        if isinstance(value, bool):
            raise ConfigError(f"'{key}' must be a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"'{key}' must be a number, got {value!r}") from None
    if key in BOOL_FIELDS:
        if not isinstance(value, bool):
            raise ConfigError(f"'{key}' must be true or false, got {value!r}")
        return value
    if not isinstance(value, str):
        raise ConfigError(f"'{key}' must be a string, got {value!r}")
    return value


def defaults() -> dict:
    return {
        "n_stimuli": settings.SALVKIT_N_STIMULI,
        "seed": settings.SALVKIT_SEED,
        "workers": settings.SALVKIT_WORKERS,
        "beta": settings.SALVKIT_BETA,
        "mode": "complete+partial",
        "filter_incorrect_signals": True,
        "exhaustive": False,
        "pair_cap": None,
    }


def load_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold one flat JSON object")
    unknown = sorted(set(data) - set(CONFIG_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config key(s) in {path}: {', '.join(unknown)}")
    return data


def resolve_config(config_path=None, **overrides) -> PipelineConfig:
    """Settings defaults, then the JSON file, then non-None overrides."""
    values = defaults()
    if config_path:
        values.update(load_config_file(config_path))
    unknown = sorted(set(overrides) - set(CONFIG_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config option(s): {', '.join(unknown)}")
    values.update({k: v for k, v in overrides.items() if v is not None})

    values = {k: _coerce(k, v) for k, v in values.items()}
    try:
        mode = DatasetMode.parse(values.pop("mode"), values.pop("filter_incorrect_signals"))
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return PipelineConfig(mode=mode, **values).validate()


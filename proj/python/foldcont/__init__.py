"""Fold continuation for semilinear Dirichlet problems on mapped domains.

Run functions take a config in the sectioned ``key = value`` text format
and a dict of ``"section.key": value`` overrides, and return plain dicts.
"""

import json
from pathlib import Path

from . import _core
from ._core import (
    BlowupError,
    BracketError,
    ConfigError,
    DegenerateMapError,
    DomainError,
    FoldcontError,
    config_keys,
    default_config,
    multistart,
    radial_family,
    shooting_fold,
    shooting_roots,
)

__all__ = [
    "BlowupError",
    "BracketError",
    "ConfigError",
    "DegenerateMapError",
    "DomainError",
    "FoldcontError",
    "config_keys",
    "default_config",
    "experiment",
    "load_config",
    "multistart",
    "oracle",
    "radial_family",
    "resolve_config",
    "shape_check",
    "shooting_fold",
    "shooting_roots",
    "spectrum",
    "trace",
]


def _overrides(overrides):
    return {k: str(v) for k, v in (overrides or {}).items()}


def load_config(path):
    return Path(path).read_text()


def resolve_config(text="", overrides=None):
    return _core.resolve_config(text, _overrides(overrides))


def trace(text="", overrides=None):
    """Branch points, events, fold records and the last point with its state."""
    return json.loads(_core.trace(text, _overrides(overrides)))


def shape_check(text="", overrides=None):
    return json.loads(_core.shape_check(text, _overrides(overrides)))


def experiment(text="", overrides=None):
    return json.loads(_core.experiment(text, _overrides(overrides)))


def oracle(text="", overrides=None):
    return json.loads(_core.oracle(text, _overrides(overrides)))


def spectrum(text="", overrides=None):
    return json.loads(_core.spectrum(text, _overrides(overrides)))

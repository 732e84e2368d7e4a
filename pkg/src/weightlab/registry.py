"""Frozen registry of fitted constants.

The registry is written once by :func:`weightlab.harness.calibrate` and only
read afterwards.  Acceptance runs never refit.
"""
from __future__ import annotations

import copy
import json
from functools import lru_cache
from pathlib import Path

REGISTRY_PATH = Path(__file__).with_name("data") / "registry.json"


@lru_cache(maxsize=None)
def _load(path: str) -> dict:
    return json.loads(Path(path).read_text())


def load_registry(path=None) -> dict:
    """Return the registry as a fresh dict (callers may not mutate the cache)."""
    return copy.deepcopy(_load(str(path or REGISTRY_PATH)))


def write_registry(entries: dict, path=None) -> Path:
    path = Path(path or REGISTRY_PATH)
    path.write_text(json.dumps(entries, indent=2, sort_keys=True) + "\n")
    _load.cache_clear()
    return path

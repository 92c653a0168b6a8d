"""Helpers for building dataclass configs from JSON with strict key checking."""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from deckrec.errors import ConfigurationError


def from_dict(cls, data: dict, **nested):
    """Instantiate dataclass ``cls`` from ``data``, rejecting unknown keys.

    ``nested`` maps field names to callables that convert sub-dicts.
    """
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{cls.__name__} config must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigurationError(f"unknown {cls.__name__} keys: {', '.join(unknown)}")
    kwargs = {}
    for k, v in data.items():
        kwargs[k] = nested[k](v) if k in nested and isinstance(v, dict) else v
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad {cls.__name__} config: {exc}") from exc


def to_dict(obj) -> dict:
    return dataclasses.asdict(obj)


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc

"""Flat ``key = value`` config files and their mapping onto the config dataclasses."""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .errors import DataFormatError


class ConfigError(DataFormatError):
    pass


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines. ``#`` starts a comment; blank lines are ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip().strip('"').strip("'")
    return out


def read_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror or exc})") from exc
    return parse_config_text(text, str(path))


def _cast(value, typ, key):
    if isinstance(value, str):
        try:
            if typ in (int, "int"):
                f = float(value)
                if f != int(f):
                    raise ValueError
                return int(f)
            if typ in (float, "float"):
                return float(value)
            if typ in (bool, "bool"):
                low = value.lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError
        except ValueError:
            raise ConfigError(f"config key {key!r}: cannot interpret {value!r} as {getattr(typ, '__name__', typ)}")
    return value


def build(cls, values: dict, **overrides):
    """Instantiate dataclass ``cls`` from the keys of ``values`` it knows about.

    ``overrides`` with a value of ``None`` are ignored so that unset CLI flags
    fall through to the file or the defaults.
    """
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in values:
            kwargs[f.name] = _cast(values[f.name], f.type, f.name)
        if overrides.get(f.name) is not None:
            kwargs[f.name] = overrides[f.name]
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from exc


def check_keys(values: dict, *classes, extra=()):
    known = set(extra)
    for cls in classes:
        known.update(f.name for f in dataclasses.fields(cls))
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

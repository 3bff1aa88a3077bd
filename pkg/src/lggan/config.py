"""Flat `key = value` experiment configuration with CLI-flag overrides.
Unknown keys are errors; every run logs the fully resolved configuration."""

from __future__ import annotations


class ConfigError(ValueError):
    pass


def _coerce(key, raw, default):
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}")
    if isinstance(default, tuple):
        try:
            return tuple(int(x) for x in raw.split(",") if x)
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated integers, got {raw!r}")
    return raw


def parse_file(path):
    pairs = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = body.split("=", 1)
            pairs.append((key.strip(), raw.strip()))
    return pairs


def resolve(defaults: dict, config_path=None, overrides=()):
    """Merge defaults <- config file <- command-line overrides ('key=value')."""
    resolved = dict(defaults)
    pairs = parse_file(config_path) if config_path else []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        pairs.append((key.strip(), raw.strip()))
    for key, raw in pairs:
        if key not in resolved:
            raise ConfigError(f"unknown config key {key!r}")
        resolved[key] = _coerce(key, raw, defaults[key])
    return resolved


def format_resolved(resolved: dict) -> str:
    lines = []
    for key in sorted(resolved):
        v = resolved[key]
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines)

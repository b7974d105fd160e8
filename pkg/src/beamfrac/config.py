"""Flat sectioned ``key = value`` configuration files.

Example::

    [scenario]
    id = buckling

    [geometry]
    length = 10.0      # m
    radius = 0.1       # m

Values are plain numbers, booleans (true/false) or words; nothing is
evaluated. ``#`` starts a comment. Every key belongs to exactly one section
and may appear once.
"""

from __future__ import annotations

import math
from dataclasses import fields
from pathlib import Path

from .errors import ConfigError
from .scenarios import ScenarioConfig

# section -> key -> (ScenarioConfig field, kind)
SCHEMA = {
    "scenario": {"id": ("scenario", "word")},
    "geometry": {"length": ("length", "float"), "radius": ("radius", "float")},
    "material": {"youngs_modulus": ("youngs_modulus", "float"), "density": ("density", "float")},
    "cohesive": {
        "enabled": ("fracture", "bool"),
        "sigma_c": ("sigma_c", "float"),
        "fracture_energy": ("fracture_energy", "float"),
        "mode_mixity": ("mode_mixity", "float"),
        "bending_initiation": ("bending_initiation", "bool"),
    },
    "penalty": {"beta_p": ("beta_p", "float"), "beta_t": ("beta_t", "float")},
    "mesh": {"h": ("h", "float")},
    "solver": {
        "kind": ("solver", "word"),
        "load_steps": ("load_steps", "int"),
        "tol_rel": ("tol_rel", "float"),
        "max_iters": ("max_iters", "int"),
        "dt": ("dt", "float"),
        "t_end": ("t_end", "float"),
        "dt_safety": ("dt_safety", "float"),
    },
    "loading": {
        "end_moment": ("end_moment", "float"),
        "delta": ("delta", "float"),
        "perturbation_force": ("perturbation_force", "float"),
        "sigma_f": ("sigma_f", "float"),
        "load_rate": ("load_rate", "float"),
        "kappa0": ("kappa0", "float"),
        "preload_steps": ("preload_steps", "int"),
        "gauge_position": ("gauge_position", "float"),
    },
    "output": {
        "snapshot_stride": ("snapshot_stride", "int"),
        "history_stride": ("history_stride", "int"),
        "vtk": ("vtk", "bool"),
    },
}

_FIELD_TO_KEY = {f: (sec, key, kind) for sec, keys in SCHEMA.items() for key, (f, kind) in keys.items()}


def _convert(text, kind, key, lineno, path):
    if kind == "word":
        if not text.replace("_", "").isalnum():
            raise ConfigError(f"'{key}' expects a single word, got '{text}'", lineno, path)
        return text
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"'{key}' expects true or false, got '{text}'", lineno, path)
    try:
        value = int(text) if kind == "int" else float(text)
    except ValueError:
        raise ConfigError(f"'{key}' expects a plain {kind} in SI units, got '{text}'", lineno, path) from None
    if kind == "float" and not math.isfinite(value):
        raise ConfigError(f"'{key}' must be finite, got '{text}'", lineno, path)
    return value


def parse_text(text: str, path=None) -> ScenarioConfig:
    values, seen = {}, {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header '{line}'", lineno, path)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno, path)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{line}'", lineno, path)
        if section is None:
            raise ConfigError("key outside any section", lineno, path)
        key, _, val = (p.strip() for p in line.partition("="))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key '{key}' in [{section}]", lineno, path)
        if not val:
            raise ConfigError(f"missing value for '{key}'", lineno, path)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key '{key}' (first set on line {seen[section, key]})", lineno, path)
        seen[section, key] = lineno
        name, kind = SCHEMA[section][key]
        values[name] = _convert(val, kind, key, lineno, path)
    if "scenario" not in values:
        raise ConfigError("missing [scenario] id", None, path)
    try:
        return ScenarioConfig(**values)
    except ConfigError as exc:
        raise ConfigError(str(exc), _blame(str(exc), seen), path) from None


def _blame(message, seen):
    """Line of the first configured key named in a validation message."""
    words = set(message.replace("'", " ").replace(",", " ").split())
    for (sec, key), lineno in seen.items():
        if key in words or SCHEMA[sec][key][0] in words:
            return lineno
    return None


def parse_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_text(text, path)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: ScenarioConfig) -> str:
    """Inverse of :func:`parse_text`; fields left at None are omitted."""
    by_section = {sec: [] for sec in SCHEMA}
    for f in fields(config):
        value = getattr(config, f.name)
        if value is None:
            continue
        sec, key, _ = _FIELD_TO_KEY[f.name]
        by_section[sec].append(f"{key} = {_format(value)}")
    blocks = [f"[{sec}]\n" + "\n".join(lines) for sec, lines in by_section.items() if lines]
    return "\n\n".join(blocks) + "\n"

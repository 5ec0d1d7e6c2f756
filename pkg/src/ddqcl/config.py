"""Flat ``key = value`` experiment configuration files.

Blank lines and ``#`` comments are ignored. Dotted keys such as
``pso.c1`` address optimizer settings and map to ``pso_c1`` on
:class:`~ddqcl.trainer.ExperimentConfig`. Angles are radians and
probabilities are plain reals. Example::

    circuit = star
    layers = 4
    optimizer = bo
    budget = 1000
    exact = true
    bo.batch_size = 5
"""

from __future__ import annotations

import typing
from dataclasses import fields
from pathlib import Path

from .trainer import ExperimentConfig


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _field_types():
    hints = typing.get_type_hints(ExperimentConfig)
    return {f.name: hints[f.name] for f in fields(ExperimentConfig)}


def _convert(raw: str, tp):
    args = [a for a in typing.get_args(tp) if a is not type(None)]
    optional = type(None) in typing.get_args(tp)
    if optional and raw.lower() in ("none", ""):
        return None
    if args:
        tp = args[0]
    if tp is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if tp is int:
        return int(raw)
    if tp is float:
        return float(raw)
    if tp is tuple or typing.get_origin(tp) is tuple:
        return tuple(int(v) for v in raw.replace(" ", "").split(",") if v)
    return raw


def parse_config_text(text: str) -> tuple[dict, dict]:
    """Return ``(values, line_of_key)`` from config text."""
    types = _field_types()
    values, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        key, raw = (s.strip() for s in stripped.split("=", 1))
        name = key.replace(".", "_").replace("-", "_")
        if name not in types:
            raise ConfigError(f"unknown key {key!r}", lineno, key)
        if name in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[name]})", lineno, key)
        try:
            values[name] = _convert(raw, types[name])
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno, key) from None
        lines[name] = lineno
    return values, lines


def build_config(values: dict, lines: dict | None = None) -> ExperimentConfig:
    """Construct and validate; validation errors cite the offending key's line."""
    lines = lines or {}
    try:
        return ExperimentConfig(**values)
    except ValueError as exc:
        msg = str(exc)
        field_name = msg.split(":", 1)[0].strip()
        raise ConfigError(msg, lines.get(field_name), field_name) from None


def load_config(path) -> ExperimentConfig:
    values, lines = parse_config_text(Path(path).read_text())
    return build_config(values, lines)


def dump_config(config: ExperimentConfig) -> str:
    out = []
    for f in fields(config):
        v = getattr(config, f.name)
        if isinstance(v, bool):
            v = str(v).lower()
        elif isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        out.append(f"{f.name} = {v}")
    return "\n".join(out) + "\n"

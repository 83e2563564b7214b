"""Run configuration from a TOML file and/or command-line flags."""

from __future__ import annotations

import dataclasses
import os
import sys
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import InputIoError
from .pipeline import RunConfig

PATH_KEYS = ("course", "events", "tags", "lo_registry", "grades", "final_grades",
             "week_overrides", "exclude_learners")
# keys accepted in a config file besides the RunConfig field names
ALIASES = {"exclusions": "exclude_learners", "break_s": "break_seconds", "out_dir": "out",
           "terminal": "terminal_dwell"}


def _normalize(data: Mapping[str, Any]) -> dict[str, Any]:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    out: dict[str, Any] = {}
    for key, value in data.items():
        name = key.replace("-", "_")
        name = ALIASES.get(name, name)
        if name not in fields:
            raise ValueError(f"unknown config key {key!r}")
        out[name] = value
    if "segments" in out:
        out["segments"] = parse_segments(out["segments"])
    return out


def parse_segments(value) -> tuple[str, ...]:
    items = value.split(",") if isinstance(value, str) else list(value)
    return tuple(dict.fromkeys(s.strip() for s in items if s.strip()))


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a TOML config; relative paths are taken relative to the file's directory."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputIoError(path, exc.strerror or str(exc)) from None
    except tomllib.TOMLDecodeError as exc:
        raise ValueError(f"{path}: {exc}") from None
    values = _normalize(data)
    base = path.parent
    for key in PATH_KEYS + ("out",):
        if isinstance(values.get(key), str) and not os.path.isabs(values[key]):
            values[key] = str(base / values[key])
    return values


def build_config(file_values: Mapping[str, Any] | None = None,
                 flag_values: Mapping[str, Any] | None = None) -> RunConfig:
    """Defaults < config file < flags. ``None`` flag values mean "not given"."""
    merged: dict[str, Any] = _normalize(file_values or {})
    for key, value in _normalize({k: v for k, v in (flag_values or {}).items() if v is not None}).items():
        merged[key] = value
    for key in ("break_seconds", "pass_threshold"):
        if key in merged:
            merged[key] = float(merged[key])
    for key in ("seed", "threads"):
        if key in merged:
            merged[key] = int(merged[key])
    config = RunConfig(**merged)
    config.validate()
    return config


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    text = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{text}"'


def dump_config(config: RunConfig, out_dir: str | Path) -> str:
    """TOML text for ``config_used.toml``.

    Input paths are written relative to ``out_dir`` so the file can be fed back
    with ``--config`` and does not change when the whole tree moves.
    """
    out_dir = Path(out_dir)
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        # threads only changes speed, never output, so it stays out of the echo
        if f.name in ("out", "threads") or value is None:
            continue
        if f.name in PATH_KEYS:
            value = Path(os.path.relpath(os.path.abspath(value), os.path.abspath(out_dir))).as_posix()
        lines.append(f"{f.name} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"

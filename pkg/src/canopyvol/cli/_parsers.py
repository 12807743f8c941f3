"""CLI argument parsing utility functions."""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import Any

from canopyvol.config import ENV_CONFIG, RunConfig, config_path_from_env, load_config_file

from canopyvol.cli._output import CLIUsageError

logger = logging.getLogger(__name__)


def _parse_ratios(value: str) -> tuple[float, float, float]:
    parts = [part.strip() for part in value.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated ratios: train,val,test")
    try:
        ratios = tuple(float(part) for part in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"ratios must be numbers, got {value!r}") from exc
    return ratios  # type: ignore[return-value]


def _parse_class_list(value: str) -> tuple[str, ...]:
    names = tuple(part.strip().lower() for part in value.split(",") if part.strip())
    if not names:
        raise argparse.ArgumentTypeError("expected at least one class name")
    return names


def _parse_extent(value: str) -> tuple[float, float]:
    normalized = value.lower().replace("x", ",")
    parts = [part.strip() for part in normalized.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected WIDTHxHEIGHT in meters, for example 40x30")
    try:
        width, height = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"extent must be numeric, got {value!r}") from exc
    return width, height


def _load_json_value(raw: str, option_name: str) -> Any:
    source = option_name
    text = raw
    if raw.startswith("@"):
        path = Path(raw[1:])
        if not path.exists():
            raise CLIUsageError(f"{option_name} references missing file: {path}")
        if not path.is_file():
            raise CLIUsageError(f"{option_name} expects a file path after '@': {path}")
        text = path.read_text(encoding="utf-8")
        source = f"{option_name} ({path})"

    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CLIUsageError(f"{source} contains invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _load_json_object(raw: str, option_name: str) -> dict[str, Any]:
    value = _load_json_value(raw, option_name)
    if not isinstance(value, dict):
        raise CLIUsageError(f"{option_name} must be a JSON object")
    return value


def _config_file_values(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    """Config values from --config (path, @file or inline JSON object), else from the environment."""
    raw = getattr(args, "config", None)
    if raw:
        if raw.startswith("@") or raw.lstrip().startswith("{"):
            return _load_json_object(raw, "--config"), "--config"
        return load_config_file(raw), str(raw)

    env_path = config_path_from_env()
    if env_path is not None:
        logger.debug("using config file from %s: %s", ENV_CONFIG, env_path)
        return load_config_file(env_path), f"{env_path} (from {ENV_CONFIG})"
    return {}, "settings"


def _flag_values(args: argparse.Namespace) -> dict[str, Any]:
    values = {name: getattr(args, name) for name in RunConfig.model_fields if hasattr(args, name)}
    # --gsd is shorthand for square pixels; explicit --gsd-x/--gsd-y still win
    square = getattr(args, "gsd_m", None)
    if square is not None:
        for name in ("gsd_x_m", "gsd_y_m"):
            if values.get(name) is None:
                values[name] = square
    return values


def _resolve_run_config(args: argparse.Namespace) -> RunConfig:
    file_values, source = _config_file_values(args)
    return RunConfig.resolve(file_values, _flag_values(args), source=source)


def _require_file(raw: str, option_name: str) -> Path:
    path = Path(raw)
    if not path.exists():
        raise CLIUsageError(f"{option_name} does not exist: {path}")
    if not path.is_file():
        raise CLIUsageError(f"{option_name} must be a file path: {path}")
    return path


def _require_file_or_dir(raw: str, option_name: str) -> Path:
    path = Path(raw)
    if not path.exists():
        raise CLIUsageError(f"{option_name} does not exist: {path}")
    return path


def _ensure_out_dir(raw: str, option_name: str) -> Path:
    path = Path(raw)
    if path.exists() and not path.is_dir():
        raise CLIUsageError(f"{option_name} must be a directory: {path}")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _png_files(directory: Path) -> list[Path]:
    return sorted((p for p in directory.iterdir() if p.is_file() and p.suffix.lower() == ".png"), key=lambda p: p.name)

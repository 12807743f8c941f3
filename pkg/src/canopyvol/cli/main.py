"""canopyvol CLI entrypoint."""

from __future__ import annotations

import logging
import sys
import traceback
from collections.abc import Sequence
from typing import Any

from canopyvol.config import ENV_CONFIG
from canopyvol.exceptions import (
    CanopyVolError,
    ConfigError,
    DimensionMismatchError,
    GeometryError,
    InputValidationError,
    PlacementError,
    RasterFormatError,
    RasterIOError,
    SceneError,
    SidecarError,
)

from canopyvol.cli._output import (
    CLIUsageError,
    _error_payload,
    _print_json,
    _print_text_error,
    _print_text_success,
    _success_payload,
)
from canopyvol.cli._parser_builder import build_parser
from canopyvol.cli._parsers import _resolve_run_config

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_UNEXPECTED = 3

GLOBAL_FLAG_OPTIONS = {"--compact", "--debug", "--quiet", "--version"}
GLOBAL_VALUE_OPTIONS = {"--config", "--format"}

ERROR_TYPES: dict[type[CanopyVolError], tuple[str, str | None]] = {
    ConfigError: ("config_error", f"Check --config, {ENV_CONFIG} and the flag values."),
    SidecarError: ("sidecar_error", "A sidecar needs gsd_x_m, gsd_y_m, timestamp_utc (UTC, trailing Z), lat_deg and lon_deg."),
    DimensionMismatchError: ("dimension_mismatch", "Prediction and ground truth must have the same width and height."),
    SceneError: ("scene_error", None),
    InputValidationError: ("validation_error", None),
    GeometryError: ("geometry_error", "Check the timestamp is UTC, or pass --sun-elevation and --sun-azimuth."),
    RasterFormatError: ("raster_format_error", "Label rasters are 8-bit single-channel PNGs holding only 0, 1 and 2."),
    RasterIOError: ("io_error", None),
    PlacementError: ("placement_error", "Lower --trees or enlarge --extent."),
}

_CLI_HANDLER_FLAG = "_canopyvol_cli"


def _normalize_global_options(argv: Sequence[str] | None) -> list[str] | None:
    if argv is None:
        return None

    moved: list[str] = []
    remaining: list[str] = []
    args = list(argv)

    index = 0
    while index < len(args):
        token = args[index]

        if token in GLOBAL_FLAG_OPTIONS:
            moved.append(token)
            index += 1
            continue

        if token in GLOBAL_VALUE_OPTIONS:
            moved.append(token)
            if index + 1 < len(args):
                moved.append(args[index + 1])
                index += 2
            else:
                index += 1
            continue

        if any(token.startswith(f"{option}=") for option in GLOBAL_VALUE_OPTIONS):
            moved.append(token)
            index += 1
            continue

        remaining.append(token)
        index += 1

    return moved + remaining


def _is_json_output_requested(raw_args: Sequence[str]) -> bool:
    args = list(raw_args)
    for index, token in enumerate(args):
        if token == "--format" and index + 1 < len(args):
            return args[index + 1] == "json"
        if token.startswith("--format="):
            return token.split("=", 1)[1] == "json"
    return False


def _configure_logging(*, debug: bool, quiet: bool) -> None:
    """One stderr handler on the package logger, replaced on every invocation."""
    package_logger = logging.getLogger("canopyvol")
    for handler in list(package_logger.handlers):
        if getattr(handler, _CLI_HANDLER_FLAG, False):
            package_logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    setattr(handler, _CLI_HANDLER_FLAG, True)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s" if not debug else "%(levelname)s %(name)s: %(message)s"))
    package_logger.addHandler(handler)
    if debug:
        package_logger.setLevel(logging.DEBUG)
    elif quiet:
        package_logger.setLevel(logging.ERROR)
    else:
        package_logger.setLevel(logging.WARNING)


def _error_type(exc: CanopyVolError) -> tuple[str, str | None]:
    for cls in type(exc).__mro__:
        if cls in ERROR_TYPES:
            return ERROR_TYPES[cls]
    return "input_error", None


def _run_with_config(args: Any) -> tuple[str, Any]:
    if not hasattr(args, "handler"):
        raise CLIUsageError("No command specified. Run `canopyvol --help` for usage.")

    config = _resolve_run_config(args)
    return str(args.command), args.handler(args, config)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    compact_output = False
    json_output = False
    command: str | None = None
    debug = False

    def report(payload: dict[str, Any]) -> None:
        if json_output:
            _print_json(payload, compact=compact_output, stream=sys.stderr)
        else:
            _print_text_error(payload, stream=sys.stderr)

    try:
        raw_args = list(argv) if argv is not None else sys.argv[1:]
        json_output = _is_json_output_requested(raw_args)
        if not raw_args:
            parser.print_help()
            return EXIT_OK
        args = parser.parse_args(_normalize_global_options(raw_args))
        compact_output = bool(getattr(args, "compact", False))
        json_output = str(getattr(args, "format", "text")) == "json"
        command = str(getattr(args, "command", "")) or None
        debug = bool(getattr(args, "debug", False))
        _configure_logging(debug=debug, quiet=bool(getattr(args, "quiet", False)))
        command, result = _run_with_config(args)
        if json_output:
            _print_json(_success_payload(command, result), compact=compact_output)
        else:
            _print_text_success(result)
        return EXIT_OK
    except CLIUsageError as exc:
        details = {"traceback": traceback.format_exc()} if debug else None
        report(
            _error_payload(
                command=command,
                error_type="usage_error",
                message=str(exc),
                hint=exc.hint or "Run `canopyvol --help` or `canopyvol <subcommand> --help` to inspect required arguments.",
                suggestions=exc.suggestions or None,
                expected_command=exc.expected_command,
                example=exc.example,
                details=details,
            )
        )
        return EXIT_USAGE
    except CanopyVolError as exc:
        error_type, hint = _error_type(exc)
        details = dict(exc.details)
        if debug:
            details["traceback"] = traceback.format_exc()
        report(_error_payload(command=command, error_type=error_type, message=str(exc), hint=hint, details=details or None))
        return EXIT_INPUT
    except OSError as exc:
        details = {"traceback": traceback.format_exc()} if debug else None
        report(_error_payload(command=command, error_type="io_error", message=str(exc), details=details))
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        details = {"traceback": traceback.format_exc()} if debug else None
        report(_error_payload(command=command, error_type="unexpected_error", message=str(exc), details=details))
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    raise SystemExit(main())

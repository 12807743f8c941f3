"""Build the top-level CLI argument parser and register subcommand builders."""

from __future__ import annotations

import argparse
from importlib.metadata import PackageNotFoundError, version as package_version

from canopyvol.config import ENV_CONFIG

from canopyvol.cli._builders.common import RichHelpFormatter
from canopyvol.cli._builders.evaluate import register_eval_parser
from canopyvol.cli._builders.measure import register_measure_parser
from canopyvol.cli._builders.shadowmask import register_shadowmask_parser
from canopyvol.cli._builders.solar import register_solar_parser
from canopyvol.cli._builders.split import register_split_parser
from canopyvol.cli._builders.synth import register_synth_parser
from canopyvol.cli._output import CLIArgumentParser


def _current_version() -> str:
    try:
        return package_version("canopyvol")
    except PackageNotFoundError:
        return "dev"


def build_parser() -> argparse.ArgumentParser:
    parser = CLIArgumentParser(
        prog="canopyvol",
        description=(
            "Tree height and biovolume from crown/shadow masks of UAV orthophotos.\n"
            "Text output is human-friendly by default; use --format json for machine-readable responses.\n"
            f"Settings resolution order: command flags > config file (--config, else {ENV_CONFIG}) > built-in defaults.\n"
            "All timestamps are UTC."
        ),
        epilog=(
            "Examples:\n"
            "  canopyvol solar --timestamp 2022-05-22T07:46:00Z --lat 43.7131 --lon 10.5825\n"
            "  canopyvol measure --labels tile.png --sidecar tile.json\n"
            "  canopyvol measure --labels ./masks --out ./inventory --workers 4\n"
            "  canopyvol eval --pred pred.png --gt gt.png --instances\n"
            "  canopyvol shadowmask --rgb tile_rgb.png --out tile_shadow.png\n"
            "  canopyvol synth --trees 10 --seed 1 --out-dir ./synth\n"
            "  canopyvol split --list images.txt --out-dir ./splits\n\n"
            "--config accepts a JSON file path, @file, or an inline JSON object.\n\n"
            "Exit codes:\n"
            "  0 success (warnings allowed)\n"
            "  1 invalid usage or arguments\n"
            "  2 input or validation error (bad file, sidecar, raster, geometry)\n"
            "  3 unexpected error"
        ),
        formatter_class=RichHelpFormatter,
    )
    parser.add_argument("--config", help=f"JSON settings file. Overrides {ENV_CONFIG}.")
    parser.add_argument("--format", choices=("text", "json"), default="text", help="Output format (default: text).")
    parser.add_argument("--compact", action="store_true", help="Output compact one-line JSON.")
    parser.add_argument("--debug", action="store_true", help="Debug logging and traceback details in error output.")
    parser.add_argument("--quiet", action="store_true", help="Silence warnings on stderr.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {_current_version()}")

    top_level = parser.add_subparsers(dest="module")
    top_level.required = True

    register_solar_parser(top_level)
    register_measure_parser(top_level)
    register_eval_parser(top_level)
    register_shadowmask_parser(top_level)
    register_synth_parser(top_level)
    register_split_parser(top_level)

    return parser

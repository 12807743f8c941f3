"""Measure parser builder."""

from __future__ import annotations

import argparse

from canopyvol.cli._builders.common import (
    add_acquisition_arguments,
    add_height_arguments,
    add_pairing_arguments,
    add_segmentation_arguments,
    add_sun_override_arguments,
    add_workers_argument,
    rich_parser_kwargs,
)
from canopyvol.cli._commands.measure import _cmd_measure


def register_measure_parser(top_level: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    measure_parser = top_level.add_parser(
        "measure",
        help="Per-tree crown area, height and biovolume from a label mask.",
        **rich_parser_kwargs(
            "Measure every tree in a crown/shadow label PNG (0 background, 1 crown, 2 shadow).\n"
            "Each crown is paired with its shadow along the sun's shadow direction; the shadow length gives the height\n"
            "and crown area times height gives the biovolume. Crowns without a usable shadow keep their area and are\n"
            "listed under warnings; the run still succeeds.",
            examples=[
                "canopyvol measure --labels tile.png --sidecar tile.json",
                "canopyvol measure --labels ./masks --out ./inventory --workers 4",
                "canopyvol measure --labels tile.png --gsd 0.01 --timestamp 2022-05-22T07:46:00Z --lat 43.7131 --lon 10.5825",
            ],
            notes=[
                "Sidecar JSON: gsd_x_m, gsd_y_m, timestamp_utc (UTC, trailing Z), lat_deg, lon_deg;",
                "optional sun_elevation_deg + sun_azimuth_deg replace the ephemeris.",
                "Without --sidecar, <stem>.json next to the image is used when present.",
                "Directory mode measures each <stem>.png with a <stem>.json sidecar, in file-name order.",
                "--out DIR writes <stem>.trees.csv and <stem>.trees.json per image.",
            ],
            fixes=[
                "Sun below the horizon at capture time: check the timestamp is UTC, or pass --sun-elevation/--sun-azimuth.",
            ],
        ),
    )
    measure_parser.add_argument("--labels", required=True, help="Label PNG or a directory of label PNGs.")
    measure_parser.add_argument("--sidecar", help="Acquisition sidecar JSON for a single label PNG.")
    measure_parser.add_argument("--out", help="Directory for per-image CSV and JSON inventories.")
    add_acquisition_arguments(measure_parser)
    add_sun_override_arguments(measure_parser)
    add_height_arguments(measure_parser)
    add_segmentation_arguments(measure_parser)
    add_pairing_arguments(measure_parser)
    add_workers_argument(measure_parser)
    measure_parser.set_defaults(handler=_cmd_measure, command="measure")

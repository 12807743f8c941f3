"""Solar parser builder."""

from __future__ import annotations

import argparse

from canopyvol.cli._builders.common import add_location_arguments, add_timestamp_argument, rich_parser_kwargs
from canopyvol.cli._commands.solar import _cmd_solar


def register_solar_parser(top_level: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    solar_parser = top_level.add_parser(
        "solar",
        help="Sun elevation and azimuth for a UTC instant and place.",
        **rich_parser_kwargs(
            "Compute the sun's elevation, azimuth (clockwise from north) and zenith for a UTC instant and location.\n"
            "Angles are printed with two decimals. A negative elevation (sun below the horizon) is reported, not an error.",
            examples=[
                "canopyvol solar --timestamp 2022-05-22T07:46:00Z --lat 43.7131 --lon 10.5825",
                "canopyvol --format json solar --timestamp 2022-03-20T12:00:00Z --lat 0 --lon 0 --details",
            ],
            fixes=[
                "Timestamps are UTC with a trailing Z; convert local camera times first (CEST is UTC+2).",
            ],
        ),
    )
    add_timestamp_argument(solar_parser)
    add_location_arguments(solar_parser)
    solar_parser.add_argument("--details", action="store_true", help="Also print declination, equation of time, hour angle and solar noon.")
    solar_parser.set_defaults(handler=_cmd_solar, command="solar")

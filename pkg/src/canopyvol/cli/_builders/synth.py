"""Synth parser builder."""

from __future__ import annotations

import argparse

from canopyvol.cli._builders.common import (
    _add_config_argument,
    add_location_arguments,
    add_sun_override_arguments,
    add_timestamp_argument,
    rich_parser_kwargs,
)
from canopyvol.cli._commands.synth import DEFAULT_SYNTH_EXTENT_M, DEFAULT_SYNTH_GSD_M, DEFAULT_SYNTH_SUN, _cmd_synth
from canopyvol.cli._parsers import _parse_extent


def register_synth_parser(top_level: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    synth_parser = top_level.add_parser(
        "synth",
        help="Render a synthetic orchard scene with known tree heights.",
        **rich_parser_kwargs(
            "Place trees at random (seeded), render crown disks and their shadow strips, and write the label PNG,\n"
            "the RGB PNG, the acquisition sidecar and the ground-truth CSV. The same seed gives identical files.",
            examples=[
                "canopyvol synth --trees 10 --seed 1 --out-dir ./synth",
                "canopyvol synth --trees 25 --extent 60x40 --gsd 0.02 --sun-elevation 45 --sun-azimuth 120 --out-dir ./synth",
            ],
            notes=[
                "Files: <stem>_labels.png, <stem>_rgb.png, <stem>_labels.json, <stem>_truth.csv (stem defaults to scene_<seed>).",
                "The sidecar carries the rendering sun angles, so `canopyvol measure` on the output uses them.",
            ],
            fixes=[
                "Placement failures mean the extent is too crowded: lower --trees or enlarge --extent.",
            ],
        ),
    )
    synth_parser.add_argument("--trees", type=int, required=True, help="Number of trees to place.")
    synth_parser.add_argument("--seed", type=int, default=0, help="Random seed (default: 0).")
    synth_parser.add_argument("--extent", type=_parse_extent, help=f"Scene size WIDTHxHEIGHT in meters (default: {DEFAULT_SYNTH_EXTENT_M[0]:g}x{DEFAULT_SYNTH_EXTENT_M[1]:g}).")
    synth_parser.add_argument("--gsd", dest="gsd_m", type=float, help=f"Pixel size in meters (default: {DEFAULT_SYNTH_GSD_M}).")
    synth_parser.add_argument("--out-dir", required=True, help="Output directory.")
    synth_parser.add_argument("--stem", help="File name stem.")
    _add_config_argument(synth_parser, "--height-mode", field="height_mode", choices=("paper", "physical"), help_text="Shadow length law the scene is rendered with.")
    add_sun_override_arguments(synth_parser)
    sidecar_group = synth_parser.add_argument_group(
        "sidecar acquisition",
        f"Written to the sidecar; the sun defaults to elevation {DEFAULT_SYNTH_SUN[0]:g}, azimuth {DEFAULT_SYNTH_SUN[1]:g}.",
    )
    add_timestamp_argument(sidecar_group)
    add_location_arguments(sidecar_group)
    synth_parser.set_defaults(handler=_cmd_synth, command="synth")

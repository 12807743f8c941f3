"""Shadowmask parser builder."""

from __future__ import annotations

import argparse

from canopyvol.cli._builders.common import _add_config_argument, rich_parser_kwargs
from canopyvol.cli._commands.shadowmask import _cmd_shadowmask


def register_shadowmask_parser(top_level: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    shadowmask_parser = top_level.add_parser(
        "shadowmask",
        help="Binary shadow-candidate mask from an RGB orthophoto.",
        **rich_parser_kwargs(
            "Mark pixels whose HSV value, max(R, G, B) / 255, is strictly below the threshold.\n"
            "The output PNG holds 255 for shadow candidates and 0 elsewhere.",
            examples=[
                "canopyvol shadowmask --rgb tile_rgb.png --out tile_shadow.png",
                "canopyvol shadowmask --rgb tile_rgb.png --out tile_shadow.png --threshold 0.4",
            ],
        ),
    )
    shadowmask_parser.add_argument("--rgb", required=True, help="RGB PNG (RGBA and palette images are converted).")
    shadowmask_parser.add_argument("--out", required=True, help="Output mask PNG path.")
    _add_config_argument(shadowmask_parser, "--threshold", field="hsv_threshold", type=float, help_text="HSV value threshold in (0, 1).")
    shadowmask_parser.set_defaults(handler=_cmd_shadowmask, command="shadowmask")

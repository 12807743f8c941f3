"""Split parser builder."""

from __future__ import annotations

import argparse

from canopyvol.cli._builders.common import rich_parser_kwargs
from canopyvol.cli._commands.split import _cmd_split
from canopyvol.cli._parsers import _parse_ratios


def register_split_parser(top_level: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    split_parser = top_level.add_parser(
        "split",
        help="Seeded train/val/test split of a file list.",
        **rich_parser_kwargs(
            "Shuffle the non-empty lines of a list file with a seeded generator and cut them into train, val and test\n"
            "subsets sized by largest-remainder apportionment of the ratios.",
            examples=[
                "canopyvol split --list images.txt --out-dir ./splits",
                "canopyvol split --list images.txt --ratios 0.8,0.1,0.1 --seed 7 --out-dir ./splits",
            ],
            notes=["Writes train.txt, val.txt and test.txt, one item per line."],
        ),
    )
    split_parser.add_argument("--list", required=True, help="Text file with one item per line.")
    split_parser.add_argument("--ratios", type=_parse_ratios, help="train,val,test fractions summing to 1 (default: 0.7,0.2,0.1).")
    split_parser.add_argument("--seed", type=int, default=0, help="Random seed (default: 0).")
    split_parser.add_argument("--out-dir", required=True, help="Output directory.")
    split_parser.set_defaults(handler=_cmd_split, command="split")

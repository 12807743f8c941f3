"""Eval parser builder."""

from __future__ import annotations

import argparse

from canopyvol.cli._builders.common import (
    _add_config_argument,
    add_class_set_argument,
    add_segmentation_arguments,
    add_workers_argument,
    rich_parser_kwargs,
)
from canopyvol.cli._commands.evaluate import _cmd_eval


def register_eval_parser(top_level: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    eval_parser = top_level.add_parser(
        "eval",
        help="Precision, recall, F1 and IoU of predicted masks against ground truth.",
        **rich_parser_kwargs(
            "Score predicted label PNGs against ground-truth label PNGs of the same size.\n"
            "Reports per-class precision, recall, F1 and IoU, their unweighted macro averages, mIoU over the\n"
            "chosen classes and the merged foreground (crown or shadow against background).",
            examples=[
                "canopyvol eval --pred pred.png --gt gt.png",
                "canopyvol eval --pred ./pred --gt ./gt --instances --out report.json",
                "canopyvol eval --pred pred.png --gt gt.png --classes background,crown,shadow",
            ],
            notes=[
                "Directory mode pairs files by name and adds a report pooled over all images.",
                "--instances adds greedy one-to-one instance matching per class at --iou-threshold.",
            ],
        ),
    )
    eval_parser.add_argument("--pred", required=True, help="Predicted label PNG or directory.")
    eval_parser.add_argument("--gt", required=True, help="Ground-truth label PNG or directory.")
    eval_parser.add_argument("--instances", action="store_true", help="Include instance-level detection metrics.")
    eval_parser.add_argument("--out", help="Also write the JSON report to this file.")
    add_class_set_argument(eval_parser)
    _add_config_argument(eval_parser, "--iou-threshold", field="iou_threshold", type=float, help_text="Minimum mask IoU for an instance match.")
    add_segmentation_arguments(eval_parser)
    add_workers_argument(eval_parser)
    eval_parser.set_defaults(handler=_cmd_eval, command="eval")

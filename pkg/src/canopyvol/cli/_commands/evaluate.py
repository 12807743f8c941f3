"""Segmentation evaluation command handler."""

from __future__ import annotations

import argparse
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from canopyvol.config import RunConfig
from canopyvol.evaluation import (
    SegmentationReport,
    format_report_table,
    instance_detection_metrics,
    pooled_segmentation_report,
    segmentation_report,
)
from canopyvol.exceptions import InputValidationError, RasterIOError
from canopyvol.mask_raster import LabelClass, LabelRaster, connected_components, load_label_raster

from canopyvol.cli._output import CLIUsageError, RenderedOutput, _normalize
from canopyvol.cli._parsers import _png_files, _require_file_or_dir

logger = logging.getLogger(__name__)


def _pairs_from_dirs(pred_dir: Path, gt_dir: Path) -> list[tuple[str, Path, Path]]:
    pred = {p.name: p for p in _png_files(pred_dir)}
    gt = {p.name: p for p in _png_files(gt_dir)}
    only_pred = sorted(pred.keys() - gt.keys())
    only_gt = sorted(gt.keys() - pred.keys())
    if only_pred or only_gt:
        raise InputValidationError(
            f"prediction and ground-truth directories do not hold the same file names ({len(only_pred)} only in --pred, {len(only_gt)} only in --gt)",
            details={"only_pred": only_pred, "only_gt": only_gt},
        )
    return [(name, pred[name], gt[name]) for name in sorted(pred)]


def _instance_scores(pred: LabelRaster, gt: LabelRaster, config: RunConfig) -> dict[str, Any]:
    scores: dict[str, Any] = {}
    for cls in (LabelClass.CROWN, LabelClass.SHADOW):
        metrics = instance_detection_metrics(
            connected_components(pred, cls, config.connectivity, config.min_area_px),
            connected_components(gt, cls, config.connectivity, config.min_area_px),
            config.iou_threshold,
        )
        scores[cls.label] = metrics.to_dict()
    return scores


def _instance_lines(scores: dict[str, Any], threshold: float) -> list[str]:
    lines = [f"instances (IoU >= {threshold:g}):"]
    for name, m in scores.items():
        lines.append(f"  {name}: precision {m['precision']:.4f}  recall {m['recall']:.4f}  f1 {m['f1']:.4f}  (tp {m['tp']}, fp {m['fp']}, fn {m['fn']})")
    return lines


def _evaluate_pair(name: str, pred_path: Path, gt_path: Path, config: RunConfig, with_instances: bool) -> dict[str, Any]:
    pred = load_label_raster(pred_path)
    gt = load_label_raster(gt_path)
    entry: dict[str, Any] = {"image": name, "report": segmentation_report(pred, gt, config.class_set())}
    if with_instances:
        entry["instances"] = _instance_scores(pred, gt, config)
    entry["_rasters"] = (pred, gt)
    return entry


def _write_report(data: dict[str, Any], path: str) -> None:
    try:
        Path(path).write_text(json.dumps(_normalize(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise RasterIOError(f"{path}: cannot write report: {exc}") from exc


def _report_text(report: SegmentationReport, instances: dict[str, Any] | None, threshold: float) -> str:
    lines = [format_report_table(report)]
    if instances is not None:
        lines.extend(_instance_lines(instances, threshold))
    return "\n".join(lines)


def _cmd_eval(args: argparse.Namespace, config: RunConfig) -> RenderedOutput:
    pred_source = _require_file_or_dir(args.pred, "--pred")
    gt_source = _require_file_or_dir(args.gt, "--gt")
    if pred_source.is_dir() != gt_source.is_dir():
        raise CLIUsageError("--pred and --gt must both be files or both be directories")

    if not pred_source.is_dir():
        entry = _evaluate_pair(pred_source.name, pred_source, gt_source, config, args.instances)
        entry.pop("_rasters")
        data: dict[str, Any] = {"report": entry["report"]}
        if args.instances:
            data["instances"] = entry["instances"]
        if args.out:
            _write_report(data, args.out)
        return RenderedOutput(data=data, text=_report_text(entry["report"], entry.get("instances"), config.iou_threshold))

    pairs = _pairs_from_dirs(pred_source, gt_source)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        entries = list(pool.map(lambda item: _evaluate_pair(*item, config, args.instances), pairs))

    pooled = pooled_segmentation_report((entry.pop("_rasters") for entry in entries), config.class_set())
    logger.debug("evaluated %d image pairs", len(entries))
    data = {"images": entries, "pooled": pooled}

    blocks = []
    for entry in entries:
        blocks.append(f"== {entry['image']} ==\n{_report_text(entry['report'], entry.get('instances'), config.iou_threshold)}")
    blocks.append(f"== pooled over {len(entries)} images ==\n{format_report_table(pooled)}")
    if args.out:
        _write_report(data, args.out)
    return RenderedOutput(data=data, text="\n\n".join(blocks))

"""Pixel-level segmentation scores and greedy instance-level detection scores."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .exceptions import DimensionMismatchError, InputValidationError
from .mask_raster import InstanceMask, LabelClass, LabelRaster

logger = logging.getLogger(__name__)

DEFAULT_CLASS_SET: tuple[LabelClass, ...] = (LabelClass.CROWN, LabelClass.SHADOW)
DEFAULT_IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class ConfusionCounts:
    """One-vs-rest pixel counts for a single class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InputValidationError(f"confusion counts must be non-negative, got {self}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def is_vacuous(self) -> bool:
        """Class absent from both prediction and ground truth."""
        return self.tp == 0 and self.fp == 0 and self.fn == 0

    def __add__(self, other: ConfusionCounts) -> ConfusionCounts:
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    def swapped(self) -> ConfusionCounts:
        return ConfusionCounts(self.tp, self.fn, self.fp, self.tn)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def precision(c: ConfusionCounts) -> float:
    return 1.0 if c.is_vacuous else _ratio(c.tp, c.tp + c.fp)


def recall(c: ConfusionCounts) -> float:
    return 1.0 if c.is_vacuous else _ratio(c.tp, c.tp + c.fn)


def f1_from_precision_recall(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def f1(c: ConfusionCounts) -> float:
    return 1.0 if c.is_vacuous else f1_from_precision_recall(precision(c), recall(c))


def iou(c: ConfusionCounts) -> float:
    return 1.0 if c.is_vacuous else _ratio(c.tp, c.tp + c.fp + c.fn)


def _check_same_shape(pred: LabelRaster, gt: LabelRaster) -> None:
    if pred.shape != gt.shape:
        raise DimensionMismatchError(
            f"prediction is {pred.width}x{pred.height} but ground truth is {gt.width}x{gt.height} (width x height)",
            details={"pred_shape": list(pred.shape), "gt_shape": list(gt.shape)},
        )


def confusion(pred: LabelRaster, gt: LabelRaster, cls: LabelClass | str | int) -> ConfusionCounts:
    _check_same_shape(pred, gt)
    target = LabelClass.parse(cls)
    p = pred.mask(target)
    g = gt.mask(target)
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=p.size - tp - fp - fn)


def foreground_confusion(pred: LabelRaster, gt: LabelRaster) -> ConfusionCounts:
    """Counts for the merged foreground (any non-background code) against background."""
    _check_same_shape(pred, gt)
    p = pred.labels != LabelClass.BACKGROUND
    g = gt.labels != LabelClass.BACKGROUND
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=p.size - tp - fp - fn)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    iou: float
    counts: ConfusionCounts

    @classmethod
    def from_counts(cls, counts: ConfusionCounts) -> ClassMetrics:
        return cls(precision(counts), recall(counts), f1(counts), iou(counts), counts)


@dataclass(frozen=True)
class MacroMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class SegmentationReport:
    per_class: dict[str, ClassMetrics]
    macro: MacroMetrics
    miou: float
    class_set: tuple[str, ...]
    foreground: ClassMetrics

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _parse_class_set(class_set: Iterable[LabelClass | str | int]) -> tuple[LabelClass, ...]:
    parsed = tuple(dict.fromkeys(LabelClass.parse(c) for c in class_set))
    if not parsed:
        raise InputValidationError("class set must name at least one class")
    return tuple(sorted(parsed))


def _report_from_counts(per_class_counts: dict[LabelClass, ConfusionCounts], foreground: ConfusionCounts) -> SegmentationReport:
    per_class = {cls.label: ClassMetrics.from_counts(counts) for cls, counts in per_class_counts.items()}
    n = len(per_class)
    macro = MacroMetrics(
        precision=sum(m.precision for m in per_class.values()) / n,
        recall=sum(m.recall for m in per_class.values()) / n,
        f1=sum(m.f1 for m in per_class.values()) / n,
    )
    return SegmentationReport(
        per_class=per_class,
        macro=macro,
        miou=sum(m.iou for m in per_class.values()) / n,
        class_set=tuple(per_class),
        foreground=ClassMetrics.from_counts(foreground),
    )


def segmentation_report(
    pred: LabelRaster,
    gt: LabelRaster,
    class_set: Iterable[LabelClass | str | int] = DEFAULT_CLASS_SET,
) -> SegmentationReport:
    """Per-class metrics, unweighted macro averages and mIoU over `class_set`."""
    classes = _parse_class_set(class_set)
    _check_same_shape(pred, gt)
    return _report_from_counts({cls: confusion(pred, gt, cls) for cls in classes}, foreground_confusion(pred, gt))


def pooled_segmentation_report(
    pairs: Iterable[tuple[LabelRaster, LabelRaster]],
    class_set: Iterable[LabelClass | str | int] = DEFAULT_CLASS_SET,
) -> SegmentationReport:
    """Report over confusion counts summed across many (pred, gt) image pairs."""
    classes = _parse_class_set(class_set)
    zero = ConfusionCounts(0, 0, 0, 0)
    totals = dict.fromkeys(classes, zero)
    foreground = zero
    images = 0
    for pred, gt in pairs:
        for cls in classes:
            totals[cls] = totals[cls] + confusion(pred, gt, cls)
        foreground = foreground + foreground_confusion(pred, gt)
        images += 1
    logger.debug("pooled report over %d image pairs", images)
    return _report_from_counts(totals, foreground)


def format_report_table(report: SegmentationReport) -> str:
    """Aligned plain-text table: one row per class, then macro and merged-foreground rows, then mIoU."""
    header = ("class", "precision", "recall", "f1", "iou")
    rows = [(name, m.precision, m.recall, m.f1, m.iou) for name, m in report.per_class.items()]
    rows.append(("macro", report.macro.precision, report.macro.recall, report.macro.f1, report.miou))
    fg = report.foreground
    rows.append(("foreground", fg.precision, fg.recall, fg.f1, fg.iou))

    cells = [header] + [(name, *(f"{value:.4f}" for value in values)) for name, *values in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[0]) if i == 0 else cell.rjust(widths[i]) for i, cell in enumerate(row)) for row in cells]
    lines.append(f"mIoU ({', '.join(report.class_set)}): {report.miou:.4f}")
    return "\n".join(lines)


@dataclass(frozen=True)
class DetectionMetrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    matches: list[tuple[int, int, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def mask_iou(a: InstanceMask, b: InstanceMask) -> float:
    inter = np.intersect1d(a.pixel_keys(), b.pixel_keys(), assume_unique=True).size
    union = a.area_px + b.area_px - inter
    return inter / union if union else 0.0


def _boxes_overlap(a: InstanceMask, b: InstanceMask) -> bool:
    ax0, ay0, ax1, ay1 = a.bbox
    bx0, by0, bx1, by1 = b.bbox
    return ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1


def instance_detection_metrics(
    pred_instances: Sequence[InstanceMask],
    gt_instances: Sequence[InstanceMask],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> DetectionMetrics:
    """Greedy one-to-one matching by descending mask IoU; a match counts when IoU >= `iou_threshold`."""
    if not (0.0 < iou_threshold <= 1.0):
        raise InputValidationError(f"IoU threshold must lie in (0, 1], got {iou_threshold}")

    scored: list[tuple[float, int, int]] = []
    for pi, pred in enumerate(pred_instances):
        for gi, gt in enumerate(gt_instances):
            if not _boxes_overlap(pred, gt):
                continue
            value = mask_iou(pred, gt)
            if value >= iou_threshold:
                scored.append((value, pi, gi))
    scored.sort(key=lambda item: (-item[0], item[1], item[2]))

    used_pred: set[int] = set()
    used_gt: set[int] = set()
    matches: list[tuple[int, int, float]] = []
    for value, pi, gi in scored:
        if pi in used_pred or gi in used_gt:
            continue
        used_pred.add(pi)
        used_gt.add(gi)
        matches.append((pred_instances[pi].id, gt_instances[gi].id, value))

    tp = len(matches)
    fp = len(pred_instances) - tp
    fn = len(gt_instances) - tp
    if tp == fp == fn == 0:
        p = r = score = 1.0
    else:
        p = _ratio(tp, tp + fp)
        r = _ratio(tp, tp + fn)
        score = f1_from_precision_recall(p, r)
    return DetectionMetrics(precision=p, recall=r, f1=score, tp=tp, fp=fp, fn=fn, matches=matches)

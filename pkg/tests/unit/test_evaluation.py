import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from canopyvol.evaluation import (
    ConfusionCounts,
    confusion,
    f1,
    f1_from_precision_recall,
    format_report_table,
    instance_detection_metrics,
    iou,
    mask_iou,
    pooled_segmentation_report,
    precision,
    recall,
    segmentation_report,
)
from canopyvol.exceptions import DimensionMismatchError, InputValidationError
from canopyvol.mask_raster import InstanceMask, LabelClass, LabelRaster


def _random_pair(rng: np.random.Generator, index: int) -> tuple[LabelRaster, LabelRaster]:
    codes = [0, 1, 2] if index % 10 else [0, 2]  # every tenth pair leaves crown absent from both
    pred = rng.choice(codes, size=(32, 32)).astype(np.uint8)
    gt = rng.choice(codes, size=(32, 32)).astype(np.uint8)
    return LabelRaster(pred), LabelRaster(gt)


def _brute_force(pred: LabelRaster, gt: LabelRaster, classes: list[int]) -> dict:
    """Independent per-pixel tally using the documented conventions."""
    per_class = {}
    for cls in classes:
        tp = fp = fn = tn = 0
        for p_row, g_row in zip(pred.labels.tolist(), gt.labels.tolist()):
            for p, g in zip(p_row, g_row):
                if p == cls and g == cls:
                    tp += 1
                elif p == cls:
                    fp += 1
                elif g == cls:
                    fn += 1
                else:
                    tn += 1
        if tp == fp == fn == 0:
            values = (1.0, 1.0, 1.0, 1.0)
        else:
            p = tp / (tp + fp) if tp + fp else 0.0
            r = tp / (tp + fn) if tp + fn else 0.0
            score = 2 * p * r / (p + r) if p + r > 0 else 0.0
            values = (p, r, score, tp / (tp + fp + fn))
        per_class[cls] = (tp, fp, fn, tn, *values)
    return per_class


def test_report_matches_brute_force_tally():
    rng = np.random.default_rng(2024)
    classes = [int(LabelClass.CROWN), int(LabelClass.SHADOW)]

    for index in range(100):
        pred, gt = _random_pair(rng, index)
        report = segmentation_report(pred, gt)
        expected = _brute_force(pred, gt, classes)

        for cls in classes:
            tp, fp, fn, tn, p, r, score, jaccard = expected[cls]
            got = report.per_class[LabelClass(cls).label]
            assert (got.counts.tp, got.counts.fp, got.counts.fn, got.counts.tn) == (tp, fp, fn, tn)
            assert (got.precision, got.recall, got.f1, got.iou) == (p, r, score, jaccard)
            assert got.f1 == pytest.approx(2 * got.iou / (1 + got.iou), abs=1e-12)

        assert report.macro.precision == sum(expected[c][4] for c in classes) / 2
        assert report.macro.recall == sum(expected[c][5] for c in classes) / 2
        assert report.macro.f1 == sum(expected[c][6] for c in classes) / 2
        assert report.miou == sum(expected[c][7] for c in classes) / 2


def test_identical_rasters_score_one_everywhere():
    raster = LabelRaster(np.array([[0, 1, 1], [2, 2, 0]], dtype=np.uint8))

    report = segmentation_report(raster, raster, class_set=("background", "crown", "shadow"))

    for metrics in report.per_class.values():
        assert (metrics.precision, metrics.recall, metrics.f1, metrics.iou) == (1.0, 1.0, 1.0, 1.0)
    assert report.miou == 1.0
    assert report.macro.f1 == 1.0
    assert report.foreground.iou == 1.0
    assert report.class_set == ("background", "crown", "shadow")


def test_absent_class_is_vacuous_and_empty_prediction_scores_zero():
    gt = LabelRaster(np.array([[1, 1], [0, 0]], dtype=np.uint8))
    pred = LabelRaster.empty(2, 2)

    report = segmentation_report(pred, gt)

    assert report.per_class["shadow"].iou == 1.0
    assert report.per_class["crown"].counts == ConfusionCounts(tp=0, fp=0, fn=2, tn=2)
    assert (report.per_class["crown"].precision, report.per_class["crown"].recall, report.per_class["crown"].f1) == (0.0, 0.0, 0.0)
    assert report.miou == 0.5


def test_swapping_roles_swaps_precision_and_recall():
    rng = np.random.default_rng(5)
    pred, gt = _random_pair(rng, 1)

    forward = confusion(pred, gt, LabelClass.CROWN)
    backward = confusion(gt, pred, LabelClass.CROWN)

    assert backward == forward.swapped()
    assert precision(backward) == recall(forward)
    assert f1(backward) == pytest.approx(f1(forward))
    assert iou(backward) == iou(forward)


def test_dimension_mismatch_is_rejected():
    with pytest.raises(DimensionMismatchError) as exc_info:
        segmentation_report(LabelRaster.empty(4, 3), LabelRaster.empty(3, 4))

    assert exc_info.value.details == {"pred_shape": [3, 4], "gt_shape": [4, 3]}


def test_class_set_validation():
    raster = LabelRaster.empty(2, 2)

    with pytest.raises(InputValidationError):
        segmentation_report(raster, raster, class_set=())
    with pytest.raises(InputValidationError):
        segmentation_report(raster, raster, class_set=("trunk",))
    assert segmentation_report(raster, raster, class_set=("shadow", "crown", "crown")).class_set == ("crown", "shadow")


def test_pooled_report_sums_counts():
    rng = np.random.default_rng(9)
    pairs = [_random_pair(rng, index) for index in range(1, 5)]

    pooled = pooled_segmentation_report(pairs)

    for name, cls in (("crown", LabelClass.CROWN), ("shadow", LabelClass.SHADOW)):
        total = ConfusionCounts(0, 0, 0, 0)
        for pred, gt in pairs:
            total = total + confusion(pred, gt, cls)
        assert pooled.per_class[name].counts == total
        assert pooled.per_class[name].iou == iou(total)


def test_f1_helpers():
    assert f1_from_precision_recall(0.0, 0.0) == 0.0
    assert f1_from_precision_recall(1.0, 0.5) == pytest.approx(2 / 3)
    with pytest.raises(InputValidationError):
        ConfusionCounts(-1, 0, 0, 0)


def test_report_table_layout():
    raster = LabelRaster(np.array([[0, 1], [2, 2]], dtype=np.uint8))

    lines = format_report_table(segmentation_report(raster, raster)).splitlines()

    assert lines[0].split() == ["class", "precision", "recall", "f1", "iou"]
    assert [line.split()[0] for line in lines[1:5]] == ["crown", "shadow", "macro", "foreground"]
    assert lines[1].split()[1:] == ["1.0000"] * 4
    assert lines[-1] == "mIoU (crown, shadow): 1.0000"


def _block(inst_id: int, x0: int, y0: int, w: int, h: int) -> InstanceMask:
    ys, xs = np.mgrid[y0 : y0 + h, x0 : x0 + w]
    return InstanceMask(inst_id, LabelClass.CROWN, xs.ravel(), ys.ravel())


def test_instance_matching_threshold_is_inclusive():
    gt = [_block(1, 0, 0, 4, 1)]
    half = [_block(1, 0, 0, 2, 1)]

    assert mask_iou(half[0], gt[0]) == 0.5
    assert instance_detection_metrics(half, gt, iou_threshold=0.5).tp == 1
    assert instance_detection_metrics(half, gt, iou_threshold=0.51).tp == 0


def test_instance_matching_is_greedy_one_to_one():
    gt = [_block(1, 0, 0, 10, 10), _block(2, 10, 0, 10, 10)]
    # one prediction straddling both, one matching the second well
    pred = [_block(1, 3, 0, 10, 10), _block(2, 11, 0, 10, 10)]

    metrics = instance_detection_metrics(pred, gt, iou_threshold=0.3)

    assert (metrics.tp, metrics.fp, metrics.fn) == (2, 0, 0)
    assert [(p, g) for p, g, _ in metrics.matches] == [(2, 2), (1, 1)]
    assert metrics.f1 == 1.0


def test_instance_matching_edge_cases():
    assert instance_detection_metrics([], []).f1 == 1.0
    missed = instance_detection_metrics([], [_block(1, 0, 0, 3, 3)])
    assert (missed.precision, missed.recall, missed.f1, missed.fn) == (0.0, 0.0, 0.0, 1)
    with pytest.raises(InputValidationError):
        instance_detection_metrics([], [], iou_threshold=0.0)

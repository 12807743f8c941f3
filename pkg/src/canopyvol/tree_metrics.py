"""Crown/shadow pairing, shadow length, shadow-derived height and biovolume per tree."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .exceptions import GeometryError, InputValidationError, RasterIOError
from .mask_raster import (
    DEFAULT_CONNECTIVITY,
    DEFAULT_MIN_AREA_PX,
    GeoTransform,
    InstanceMask,
    LabelClass,
    LabelRaster,
    connected_components,
    crown_area_m2,
)
from .solar_geometry import GeoLocation, SolarPosition, UtcInstant, shadow_direction_vector, solar_position

logger = logging.getLogger(__name__)

DEFAULT_TRUNK_OFFSET_M = 0.8
DEFAULT_FORM_FACTOR = 1.0
DEFAULT_LATERAL_RADIUS_FACTOR = 1.5
DEFAULT_MAX_GAP_M = 3.0

RECORD_COLUMNS = ["tree_id", "crown_area_m2", "shadow_length_m", "height_m", "biovolume_m3"]
_UNIT_TOLERANCE = 1e-9


class HeightMode(str, Enum):
    PAPER = "paper"  # H = L / tan(elevation)
    PHYSICAL = "physical"  # H = L * tan(elevation)


class OffsetTarget(str, Enum):
    HEIGHT = "height"
    LENGTH = "length"


@dataclass(frozen=True)
class HeightModel:
    mode: HeightMode = HeightMode.PAPER
    trunk_offset_m: float = DEFAULT_TRUNK_OFFSET_M
    offset_on: OffsetTarget = OffsetTarget.HEIGHT

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", HeightMode(self.mode))
        object.__setattr__(self, "offset_on", OffsetTarget(self.offset_on))
        if not self.trunk_offset_m >= 0:
            raise InputValidationError(f"trunk_offset_m must be >= 0, got {self.trunk_offset_m}")


@dataclass(frozen=True)
class PairingParams:
    """Crown↔shadow search bounds. `max_lateral_m=None` scales with each crown's equivalent radius."""

    max_lateral_m: float | None = None
    lateral_radius_factor: float = DEFAULT_LATERAL_RADIUS_FACTOR
    max_gap_m: float = DEFAULT_MAX_GAP_M

    def __post_init__(self) -> None:
        if self.max_lateral_m is not None and not self.max_lateral_m > 0:
            raise InputValidationError(f"max_lateral_m must be > 0, got {self.max_lateral_m}")
        if not self.lateral_radius_factor > 0:
            raise InputValidationError(f"lateral_radius_factor must be > 0, got {self.lateral_radius_factor}")
        if not self.max_gap_m >= 0:
            raise InputValidationError(f"max_gap_m must be >= 0, got {self.max_gap_m}")

    def lateral_limit_m(self, crown: InstanceMask, gt: GeoTransform) -> float:
        if self.max_lateral_m is not None:
            return self.max_lateral_m
        equivalent_radius_m = math.sqrt(crown_area_m2(crown, gt) / math.pi)
        return self.lateral_radius_factor * equivalent_radius_m


@dataclass(frozen=True)
class TreePairing:
    crown_id: int
    shadow_id: int | None = None
    axial_gap_m: float | None = None

    def __post_init__(self) -> None:
        if (self.shadow_id is None) != (self.axial_gap_m is None):
            raise InputValidationError("axial_gap_m is set exactly when a shadow is paired")
        if self.axial_gap_m is not None and self.axial_gap_m < 0:
            raise InputValidationError(f"axial_gap_m must be >= 0, got {self.axial_gap_m}")


@dataclass(frozen=True)
class TreeRecord:
    tree_id: int
    crown_area_m2: float
    shadow_length_m: float | None = None
    height_m: float | None = None
    biovolume_m3: float | None = None

    def __post_init__(self) -> None:
        present = {self.shadow_length_m is not None, self.height_m is not None, self.biovolume_m3 is not None}
        if len(present) != 1:
            raise InputValidationError(f"tree {self.tree_id}: shadow length, height and biovolume must be all present or all absent")
        for name in ("crown_area_m2", "shadow_length_m", "height_m", "biovolume_m3"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise InputValidationError(f"tree {self.tree_id}: {name} must be >= 0, got {value}")

    @property
    def is_measured(self) -> bool:
        return self.height_m is not None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SceneMeasurement:
    records: list[TreeRecord]
    pairings: list[TreePairing]
    sun: SolarPosition
    warnings: list[str] = field(default_factory=list)


def _check_unit(d: tuple[float, float]) -> tuple[float, float]:
    dx, dy = float(d[0]), float(d[1])
    if abs(math.hypot(dx, dy) - 1.0) > _UNIT_TOLERANCE:
        raise InputValidationError(f"shadow direction must be a unit vector, got ({dx}, {dy})")
    return dx, dy


def _metric_coords(inst: InstanceMask, gt: GeoTransform) -> tuple[np.ndarray, np.ndarray]:
    return (inst.xs + 0.5) * gt.gsd_x, (inst.ys + 0.5) * gt.gsd_y


def _bbox_distance_m(point: tuple[float, float], inst: InstanceMask, gt: GeoTransform) -> float:
    x0, y0, x1, y1 = inst.bbox
    px, py = point
    dx = max(x0 * gt.gsd_x - px, 0.0, px - x1 * gt.gsd_x)
    dy = max(y0 * gt.gsd_y - py, 0.0, py - y1 * gt.gsd_y)
    return math.hypot(dx, dy)


def pair_crowns_shadows(
    crowns: Sequence[InstanceMask],
    shadows: Sequence[InstanceMask],
    d: tuple[float, float],
    gt: GeoTransform,
    params: PairingParams | None = None,
) -> list[TreePairing]:
    """Assign each crown at most one shadow lying down-sun of its centroid.

    A shadow is a candidate for a crown when it has a pixel ahead of the centroid along `d`, within the lateral
    limit of the axis, and its nearest such pixel is no further than `max_gap_m`. Candidates are taken greedily by
    ascending gap (ties: crown id, then shadow id). Returned in crown id order.
    """
    params = params or PairingParams()
    dx, dy = _check_unit(d)

    shadow_coords = {s.id: _metric_coords(s, gt) for s in shadows}
    candidates: list[tuple[float, int, int]] = []
    for crown in crowns:
        cx, cy = crown.centroid_px
        base = (cx * gt.gsd_x, cy * gt.gsd_y)
        lateral_limit = params.lateral_limit_m(crown, gt)
        reach = math.hypot(params.max_gap_m, lateral_limit)
        for shadow in shadows:
            if _bbox_distance_m(base, shadow, gt) > reach:
                continue
            sx, sy = shadow_coords[shadow.id]
            rel_x, rel_y = sx - base[0], sy - base[1]
            along = rel_x * dx + rel_y * dy
            across = rel_x * -dy + rel_y * dx
            eligible = (along > 0) & (np.abs(across) <= lateral_limit)
            if not eligible.any():
                continue
            gap = float(along[eligible].min())
            if gap <= params.max_gap_m:
                candidates.append((gap, crown.id, shadow.id))

    candidates.sort()
    matched: dict[int, tuple[int, float]] = {}
    used_shadows: set[int] = set()
    for gap, crown_id, shadow_id in candidates:
        if crown_id in matched or shadow_id in used_shadows:
            continue
        matched[crown_id] = (shadow_id, gap)
        used_shadows.add(shadow_id)

    pairings = []
    for crown in sorted(crowns, key=lambda c: c.id):
        if crown.id in matched:
            shadow_id, gap = matched[crown.id]
            pairings.append(TreePairing(crown.id, shadow_id, gap))
        else:
            pairings.append(TreePairing(crown.id))
    logger.debug("paired %d of %d crowns with %d shadows", len(matched), len(crowns), len(shadows))
    return pairings


def shadow_length_m(crown: InstanceMask, shadow: InstanceMask, d: tuple[float, float], gt: GeoTransform) -> float:
    """Distance from the crown centroid to the farthest shadow pixel center, measured along `d`."""
    if not gt.is_isotropic:
        raise InputValidationError(f"shadow length needs an isotropic GSD, got gsd_x={gt.gsd_x}, gsd_y={gt.gsd_y}")
    dx, dy = _check_unit(d)
    cx, cy = crown.centroid_px
    projections = (shadow.xs + 0.5 - cx) * dx + (shadow.ys + 0.5 - cy) * dy
    farthest = float(projections.max())
    if farthest <= 0:
        raise GeometryError(
            f"non-positive projection of shadow {shadow.id} on crown {crown.id} along the shadow direction",
            details={"crown_id": crown.id, "shadow_id": shadow.id, "max_projection_px": farthest},
        )
    return gt.gsd_x * farthest


def tree_height_m(L_s: float, sp: SolarPosition, hm: HeightModel | None = None) -> float:
    hm = hm or HeightModel()
    if not (0.0 < sp.elevation_deg < 90.0):
        raise GeometryError(f"shadow height needs a sun elevation in (0, 90) deg, got {sp.elevation_deg}")
    if L_s < 0:
        raise InputValidationError(f"shadow length must be >= 0, got {L_s}")

    length = max(L_s - hm.trunk_offset_m, 0.0) if hm.offset_on is OffsetTarget.LENGTH else L_s
    tan_elev = math.tan(math.radians(sp.elevation_deg))
    height = length / tan_elev if hm.mode is HeightMode.PAPER else length * tan_elev
    if hm.offset_on is OffsetTarget.HEIGHT:
        height -= hm.trunk_offset_m
    return max(height, 0.0)


def biovolume_m3(A_c: float, H_t: float, form_factor: float = DEFAULT_FORM_FACTOR) -> float:
    if A_c < 0 or H_t < 0:
        raise InputValidationError(f"crown area and height must be >= 0, got A_c={A_c}, H_t={H_t}")
    if not form_factor > 0:
        raise InputValidationError(f"form factor must be > 0, got {form_factor}")
    return form_factor * A_c * H_t


def measure_scene_detailed(
    r: LabelRaster,
    gt: GeoTransform,
    t: UtcInstant,
    loc: GeoLocation,
    hm: HeightModel | None = None,
    pairing: PairingParams | None = None,
    *,
    form_factor: float = DEFAULT_FORM_FACTOR,
    connectivity: int = DEFAULT_CONNECTIVITY,
    min_area_px: int = DEFAULT_MIN_AREA_PX,
    sun: SolarPosition | None = None,
) -> SceneMeasurement:
    """Full per-scene pipeline. `sun` replaces the ephemeris when given.

    Unpaired crowns become area-only records with a warning; only scene-level problems raise.
    """
    hm = hm or HeightModel()
    if not gt.is_isotropic:
        raise InputValidationError(f"measurement needs an isotropic GSD, got gsd_x={gt.gsd_x}, gsd_y={gt.gsd_y}")
    sp = sun if sun is not None else solar_position(t, loc)
    d = shadow_direction_vector(sp)

    crowns = connected_components(r, LabelClass.CROWN, connectivity, min_area_px)
    shadows = connected_components(r, LabelClass.SHADOW, connectivity, min_area_px)
    pairings = pair_crowns_shadows(crowns, shadows, d, gt, pairing)
    shadows_by_id = {s.id: s for s in shadows}

    records: list[TreeRecord] = []
    warnings: list[str] = []
    for crown, pair in zip(crowns, pairings, strict=True):
        area = crown_area_m2(crown, gt)
        if pair.shadow_id is None:
            message = f"tree {crown.id}: no shadow matched; height and biovolume omitted"
            logger.warning(message)
            warnings.append(message)
            records.append(TreeRecord(crown.id, area))
            continue
        try:
            length = shadow_length_m(crown, shadows_by_id[pair.shadow_id], d, gt)
        except GeometryError as exc:
            message = f"tree {crown.id}: {exc}"
            logger.warning(message)
            warnings.append(message)
            records.append(TreeRecord(crown.id, area))
            continue
        height = tree_height_m(length, sp, hm)
        records.append(TreeRecord(crown.id, area, length, height, biovolume_m3(area, height, form_factor)))

    logger.debug("measured %d trees (%d with height)", len(records), sum(rec.is_measured for rec in records))
    return SceneMeasurement(records=records, pairings=pairings, sun=sp, warnings=warnings)


def measure_scene(
    r: LabelRaster,
    gt: GeoTransform,
    t: UtcInstant,
    loc: GeoLocation,
    hm: HeightModel | None = None,
    pairing: PairingParams | None = None,
    **options: Any,
) -> list[TreeRecord]:
    return measure_scene_detailed(r, gt, t, loc, hm, pairing, **options).records


def records_to_frame(records: Sequence[TreeRecord]) -> pd.DataFrame:
    frame = pd.DataFrame([rec.to_dict() for rec in records], columns=RECORD_COLUMNS)
    frame["tree_id"] = frame["tree_id"].astype("int64")
    for column in RECORD_COLUMNS[1:]:
        frame[column] = frame[column].astype("float64")
    return frame


def records_to_csv(records: Sequence[TreeRecord]) -> str:
    """CSV with fixed 3-decimal formatting; absent values are empty cells."""
    return records_to_frame(records).to_csv(index=False, float_format="%.3f", na_rep="", lineterminator="\n")


def write_records_csv(records: Sequence[TreeRecord], path: str | Path) -> None:
    try:
        Path(path).write_text(records_to_csv(records), encoding="utf-8")
    except OSError as exc:
        raise RasterIOError(f"{path}: cannot write CSV: {exc}") from exc


def _round3(value: float | None) -> float | None:
    return None if value is None else round(value, 3)


def records_to_json(records: Sequence[TreeRecord]) -> list[dict[str, Any]]:
    return [{key: (value if key == "tree_id" else _round3(value)) for key, value in rec.to_dict().items()} for rec in records]


def write_records_json(records: Sequence[TreeRecord], path: str | Path, *, warnings: Sequence[str] = ()) -> None:
    payload = {"trees": records_to_json(records), "warnings": list(warnings)}
    try:
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise RasterIOError(f"{path}: cannot write JSON: {exc}") from exc


def inventory_summary(records: Sequence[TreeRecord]) -> dict[str, Any]:
    measured = [rec for rec in records if rec.is_measured]
    return {
        "trees": len(records),
        "measured_trees": len(measured),
        "total_crown_area_m2": round(sum(rec.crown_area_m2 for rec in records), 3),
        "total_biovolume_m3": round(sum(rec.biovolume_m3 or 0.0 for rec in measured), 3),
    }

"""Synthetic orchard scenes with known tree geometry, and the Monte Carlo dataset splitter.

Scene coordinates are meters with x east and y south, origin at the raster's top-left corner, so pixel
(x, y) has its center at ((x + 0.5) * gsd, (y + 0.5) * gsd).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import TypeVar

import numpy as np
import pandas as pd

from .exceptions import InputValidationError, PlacementError, RasterIOError, SceneError
from .mask_raster import LabelClass, LabelRaster, RgbRaster
from .solar_geometry import SolarPosition, shadow_direction_vector
from .tree_metrics import HeightMode

logger = logging.getLogger(__name__)

T = TypeVar("T")

BACKGROUND_RGB = (204, 200, 180)  # V = 0.80
CROWN_RGB = (70, 140, 60)  # V = 0.55
SHADOW_RGB = (40, 45, 51)  # V = 0.20

MIN_RENDER_ELEVATION_DEG = 5.0
MAX_RENDER_ELEVATION_DEG = 85.0
# shadow must show this many pixels beyond the crown edge to be segmented and measured
MIN_SHADOW_OVERHANG_PX = 4
DEFAULT_RADIUS_RANGE = (0.8, 2.0)
DEFAULT_HEIGHT_RANGE = (1.5, 4.0)
DEFAULT_SPLIT_RATIOS = (0.70, 0.20, 0.10)
GROUND_TRUTH_COLUMNS = ["tree_id", "base_x_m", "base_y_m", "crown_radius_m", "height_m"]


@dataclass(frozen=True)
class TreeSpec:
    base_x_m: float
    base_y_m: float
    crown_radius_m: float
    height_m: float

    def __post_init__(self) -> None:
        if not self.crown_radius_m > 0:
            raise SceneError(f"crown_radius_m must be > 0, got {self.crown_radius_m}")
        if not self.height_m > 0:
            raise SceneError(f"height_m must be > 0, got {self.height_m}")


def shadow_distance_m(tree: TreeSpec, sun: SolarPosition, height_mode: HeightMode | str = HeightMode.PAPER) -> float:
    """Base-to-tip shadow distance that the matching height formula inverts exactly."""
    tan_elev = math.tan(math.radians(sun.elevation_deg))
    if HeightMode(height_mode) is HeightMode.PAPER:
        return tree.height_m * tan_elev
    return tree.height_m / tan_elev


def _shadow_corners(tree: TreeSpec, d: tuple[float, float], length: float) -> list[tuple[float, float]]:
    dx, dy = d
    px, py = -dy * tree.crown_radius_m, dx * tree.crown_radius_m
    bx, by = tree.base_x_m, tree.base_y_m
    tx, ty = bx + dx * length, by + dy * length
    return [(bx + px, by + py), (bx - px, by - py), (tx + px, ty + py), (tx - px, ty - py)]


@dataclass(frozen=True)
class SceneSpec:
    extent_w_m: float
    extent_h_m: float
    gsd_m: float
    trees: tuple[TreeSpec, ...]
    sun: SolarPosition
    seed: int = 0
    height_mode: HeightMode = HeightMode.PAPER

    def __post_init__(self) -> None:
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "height_mode", HeightMode(self.height_mode))
        self.validate()

    @property
    def width_px(self) -> int:
        return int(round(self.extent_w_m / self.gsd_m))

    @property
    def height_px(self) -> int:
        return int(round(self.extent_h_m / self.gsd_m))

    @property
    def shadow_direction(self) -> tuple[float, float]:
        return shadow_direction_vector(self.sun)

    def shadow_distance(self, tree: TreeSpec) -> float:
        return shadow_distance_m(tree, self.sun, self.height_mode)

    @property
    def min_shadow_overhang_m(self) -> float:
        return MIN_SHADOW_OVERHANG_PX * self.gsd_m

    def validate(self) -> None:
        if not self.gsd_m > 0:
            raise SceneError(f"gsd_m must be > 0, got {self.gsd_m}")
        if not (self.extent_w_m > 0 and self.extent_h_m > 0):
            raise SceneError(f"scene extent must be positive, got {self.extent_w_m} x {self.extent_h_m} m")
        if not (MIN_RENDER_ELEVATION_DEG < self.sun.elevation_deg < MAX_RENDER_ELEVATION_DEG):
            raise SceneError(f"sun elevation must lie in ({MIN_RENDER_ELEVATION_DEG}, {MAX_RENDER_ELEVATION_DEG}) deg to render shadows, got {self.sun.elevation_deg}")

        d = self.shadow_direction
        for index, tree in enumerate(self.trees, start=1):
            r = tree.crown_radius_m
            if not (r <= tree.base_x_m <= self.extent_w_m - r and r <= tree.base_y_m <= self.extent_h_m - r):
                raise SceneError(f"tree {index}: crown disk leaves the scene extent")
            distance = self.shadow_distance(tree)
            overhang = distance - r
            if overhang < self.min_shadow_overhang_m:
                raise SceneError(
                    f"tree {index}: shadow ends {overhang:.2f} m past the crown edge, need {self.min_shadow_overhang_m:.2f} m; change the sun elevation or the tree height",
                    details={"tree": index, "shadow_distance_m": distance, "crown_radius_m": r},
                )
            for x, y in _shadow_corners(tree, d, distance):
                if not (0.0 <= x <= self.extent_w_m and 0.0 <= y <= self.extent_h_m):
                    raise SceneError(f"tree {index}: shadow exits the scene extent")
        for i, a in enumerate(self.trees):
            for j in range(i + 1, len(self.trees)):
                b = self.trees[j]
                if math.hypot(a.base_x_m - b.base_x_m, a.base_y_m - b.base_y_m) < a.crown_radius_m + b.crown_radius_m:
                    raise SceneError(f"crowns of trees {i + 1} and {j + 1} overlap")


def render_scene(s: SceneSpec) -> tuple[LabelRaster, RgbRaster]:
    """Rasterise crowns (disks) and shadows (base-anchored strips of width 2r); crowns overwrite shadows."""
    s.validate()
    labels = np.zeros((s.height_px, s.width_px), dtype=np.uint8)
    dx, dy = s.shadow_direction

    footprints = []
    for tree in s.trees:
        length = s.shadow_distance(tree)
        corners = _shadow_corners(tree, (dx, dy), length)
        r = tree.crown_radius_m
        xs_m = [x for x, _ in corners] + [tree.base_x_m - r, tree.base_x_m + r]
        ys_m = [y for _, y in corners] + [tree.base_y_m - r, tree.base_y_m + r]
        x0 = max(int(math.floor(min(xs_m) / s.gsd_m)) - 1, 0)
        x1 = min(int(math.ceil(max(xs_m) / s.gsd_m)) + 1, s.width_px)
        y0 = max(int(math.floor(min(ys_m) / s.gsd_m)) - 1, 0)
        y1 = min(int(math.ceil(max(ys_m) / s.gsd_m)) + 1, s.height_px)
        cx = (np.arange(x0, x1) + 0.5) * s.gsd_m - tree.base_x_m
        cy = (np.arange(y0, y1) + 0.5) * s.gsd_m - tree.base_y_m
        rel_x, rel_y = np.meshgrid(cx, cy)
        along = rel_x * dx + rel_y * dy
        across = rel_x * -dy + rel_y * dx
        shadow = (along >= 0) & (along <= length) & (np.abs(across) <= r)
        crown = rel_x**2 + rel_y**2 <= r * r
        footprints.append(((slice(y0, y1), slice(x0, x1)), shadow, crown))

    for window, shadow, _ in footprints:
        labels[window][shadow] = LabelClass.SHADOW
    for window, _, crown in footprints:
        labels[window][crown] = LabelClass.CROWN

    rgb = np.empty((s.height_px, s.width_px, 3), dtype=np.uint8)
    rgb[...] = BACKGROUND_RGB
    rgb[labels == LabelClass.CROWN] = CROWN_RGB
    rgb[labels == LabelClass.SHADOW] = SHADOW_RGB
    logger.debug("rendered %d trees into %dx%d raster", len(s.trees), s.width_px, s.height_px)
    return LabelRaster(labels), RgbRaster(rgb)


def _point_segment_distance(p: tuple[float, float], a: tuple[float, float], b: tuple[float, float]) -> float:
    ax, ay = a
    vx, vy = b[0] - ax, b[1] - ay
    wx, wy = p[0] - ax, p[1] - ay
    seg2 = vx * vx + vy * vy
    t = 0.0 if seg2 == 0 else min(1.0, max(0.0, (wx * vx + wy * vy) / seg2))
    return math.hypot(wx - t * vx, wy - t * vy)


def _segments_distance(a0, a1, b0, b1) -> float:
    # parallel or crossing segments both reduce to endpoint distances unless they intersect
    if _segments_intersect(a0, a1, b0, b1):
        return 0.0
    return min(
        _point_segment_distance(a0, b0, b1),
        _point_segment_distance(a1, b0, b1),
        _point_segment_distance(b0, a0, a1),
        _point_segment_distance(b1, a0, a1),
    )


def _segments_intersect(a0, a1, b0, b1) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1, d2 = orient(b0, b1, a0), orient(b0, b1, a1)
    d3, d4 = orient(a0, a1, b0), orient(a0, a1, b1)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and 0 not in (d1, d2, d3, d4)


@dataclass
class _Placed:
    tree: TreeSpec
    base: tuple[float, float]
    tip: tuple[float, float]


def _placement_ok(candidate: _Placed, placed: Sequence[_Placed], spacing_factor: float, margin: float, lateral_factor: float) -> bool:
    r = candidate.tree.crown_radius_m
    for other in placed:
        q = other.tree.crown_radius_m
        if math.hypot(candidate.base[0] - other.base[0], candidate.base[1] - other.base[1]) < spacing_factor * (r + q):
            return False
        # shadow footprints stay disjoint, so no shadow merges with a neighbour
        if _segments_distance(candidate.base, candidate.tip, other.base, other.tip) < r + q + margin:
            return False
        # inside a crown's lateral search window a neighbour's shadow starts at least one radius down-sun,
        # behind the crown's own first shadow pixels (and vice versa)
        if _point_segment_distance(candidate.base, other.base, other.tip) < math.hypot(lateral_factor * r, r) + q + margin:
            return False
        if _point_segment_distance(other.base, candidate.base, candidate.tip) < math.hypot(lateral_factor * q, q) + r + margin:
            return False
    return True


def random_scene(
    n_trees: int,
    extent: tuple[float, float],
    gsd: float,
    sun: SolarPosition,
    seed: int,
    *,
    height_mode: HeightMode | str = HeightMode.PAPER,
    radius_range: tuple[float, float] = DEFAULT_RADIUS_RANGE,
    height_range: tuple[float, float] = DEFAULT_HEIGHT_RANGE,
    spacing_factor: float = 2.0,
    max_attempts: int = 20_000,
) -> SceneSpec:
    """Rejection-sample `n_trees` trees whose crowns and shadows neither overlap nor leave the extent."""
    if n_trees < 0:
        raise InputValidationError(f"n_trees must be >= 0, got {n_trees}")
    width, height = extent
    mode = HeightMode(height_mode)
    rng = np.random.default_rng(seed)
    template = SceneSpec(width, height, gsd, (), sun, seed, mode)
    d = template.shadow_direction
    margin = 2.0 * gsd
    overhang = template.min_shadow_overhang_m
    longest = shadow_distance_m(TreeSpec(0.0, 0.0, radius_range[0], height_range[1]), sun, mode)
    if n_trees > 0 and longest - radius_range[0] < overhang:
        raise SceneError(
            f"no tree in the height range casts a shadow past its crown at sun elevation {sun.elevation_deg:.1f} deg ({mode.value} mode)",
            details={"longest_shadow_m": longest, "min_radius_m": radius_range[0]},
        )

    placed: list[_Placed] = []
    attempts = 0
    while len(placed) < n_trees:
        if attempts >= max_attempts:
            density = len(placed) / (width * height)
            raise PlacementError(
                f"placed only {len(placed)} of {n_trees} trees after {max_attempts} attempts ({density * 10_000:.1f} trees/ha in a {width} x {height} m extent)",
                details={"placed": len(placed), "requested": n_trees, "trees_per_ha": density * 10_000},
            )
        attempts += 1
        r = float(rng.uniform(*radius_range))
        h = float(rng.uniform(*height_range))
        x = float(rng.uniform(r, width - r))
        y = float(rng.uniform(r, height - r))
        tree = TreeSpec(x, y, r, h)
        length = shadow_distance_m(tree, sun, mode)
        if length - r < overhang:
            continue
        corners = _shadow_corners(tree, d, length)
        if not all(margin <= cx <= width - margin and margin <= cy <= height - margin for cx, cy in corners):
            continue
        candidate = _Placed(tree, (x, y), (x + d[0] * length, y + d[1] * length))
        if _placement_ok(candidate, placed, spacing_factor, margin, lateral_factor=1.5):
            placed.append(candidate)

    logger.debug("placed %d trees in %d attempts (seed=%d)", n_trees, attempts, seed)
    return SceneSpec(width, height, gsd, tuple(p.tree for p in placed), sun, seed, mode)


def ground_truth_frame(scene: SceneSpec) -> pd.DataFrame:
    rows = [
        {"tree_id": index, "base_x_m": t.base_x_m, "base_y_m": t.base_y_m, "crown_radius_m": t.crown_radius_m, "height_m": t.height_m}
        for index, t in enumerate(scene.trees, start=1)
    ]
    return pd.DataFrame(rows, columns=GROUND_TRUTH_COLUMNS)


def write_ground_truth_csv(scene: SceneSpec, path: str | Path) -> None:
    try:
        ground_truth_frame(scene).to_csv(path, index=False, float_format="%.4f", lineterminator="\n")
    except OSError as exc:
        raise RasterIOError(f"{path}: cannot write CSV: {exc}") from exc


@dataclass(frozen=True)
class SplitResult:
    train: list = field(default_factory=list)
    val: list = field(default_factory=list)
    test: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.train, self.val, self.test))


def apportion(n: int, ratios: Sequence[float]) -> list[int]:
    """Largest-remainder integer sizes; ties go to the earlier subset."""
    exact = [n * ratio for ratio in ratios]
    sizes = [math.floor(value) for value in exact]
    leftover = n - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes


def monte_carlo_split(item_ids: Sequence[T], ratios: Sequence[float] = DEFAULT_SPLIT_RATIOS, seed: int = 0) -> SplitResult:
    """Seeded uniform shuffle, then contiguous train/val/test cut sized by largest remainder."""
    if len(ratios) != 3:
        raise InputValidationError(f"expected three ratios (train, val, test), got {len(ratios)}")
    if any(not ratio > 0 for ratio in ratios):
        raise InputValidationError(f"split ratios must be positive, got {tuple(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InputValidationError(f"split ratios must sum to 1, got {sum(ratios)}")

    items = list(item_ids)
    order = np.random.default_rng(seed).permutation(len(items))
    shuffled = [items[i] for i in order]
    n_train, n_val, _ = apportion(len(items), ratios)
    return SplitResult(
        train=shuffled[:n_train],
        val=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
    )

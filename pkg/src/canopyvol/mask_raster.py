"""Label/RGB raster I/O, connected-component instances, crown area and HSV shadow candidates."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
import numpy.typing as npt
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .exceptions import InputValidationError, RasterFormatError, RasterIOError

logger = logging.getLogger(__name__)

DEFAULT_CONNECTIVITY = 8
DEFAULT_MIN_AREA_PX = 16
DEFAULT_HSV_THRESHOLD = 0.5
LABEL_IMAGE_MODES = frozenset({"L", "P"})


class LabelClass(IntEnum):
    BACKGROUND = 0
    CROWN = 1
    SHADOW = 2

    @classmethod
    def parse(cls, value: str | int | LabelClass) -> LabelClass:
        if isinstance(value, LabelClass):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError as exc:
                raise InputValidationError(f"unknown class {value!r}; expected background, crown or shadow") from exc
        try:
            return cls(int(value))
        except ValueError as exc:
            raise InputValidationError(f"unknown class code {value!r}") from exc

    @property
    def label(self) -> str:
        return self.name.lower()


_VALID_CODES = frozenset(int(code) for code in LabelClass)


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GeoTransform:
    """Ground sampling distance in meters per pixel along raster x and y."""

    gsd_x: float
    gsd_y: float

    def __post_init__(self) -> None:
        if not (self.gsd_x > 0 and self.gsd_y > 0):
            raise InputValidationError(f"GSD must be positive on both axes, got gsd_x={self.gsd_x}, gsd_y={self.gsd_y}")

    @classmethod
    def square(cls, gsd: float) -> GeoTransform:
        return cls(gsd, gsd)

    @property
    def is_isotropic(self) -> bool:
        return self.gsd_x == self.gsd_y

    @property
    def pixel_area_m2(self) -> float:
        return self.gsd_x * self.gsd_y


@dataclass(frozen=True, eq=False)
class LabelRaster:
    """Per-pixel class codes, shape (height, width), values in {0, 1, 2}."""

    labels: npt.NDArray[np.uint8]

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise RasterFormatError(f"label raster must be 2-D, got shape {labels.shape}")
        _check_codes(labels)
        object.__setattr__(self, "labels", _readonly(labels.astype(np.uint8, copy=False)))

    @classmethod
    def empty(cls, width: int, height: int) -> LabelRaster:
        return cls(np.zeros((height, width), dtype=np.uint8))

    @property
    def width(self) -> int:
        return int(self.labels.shape[1])

    @property
    def height(self) -> int:
        return int(self.labels.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def mask(self, cls: LabelClass | str | int) -> npt.NDArray[np.bool_]:
        return self.labels == int(LabelClass.parse(cls))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelRaster):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.labels, other.labels))

    __hash__ = None  # type: ignore[assignment]


def _check_codes(labels: np.ndarray) -> None:
    bad = ~np.isin(labels, list(_VALID_CODES))
    if bad.any():
        y, x = (int(v) for v in np.argwhere(bad)[0])
        value = int(labels[y, x])
        raise RasterFormatError(
            f"invalid label code {value} at pixel (x={x}, y={y}); expected 0 (background), 1 (crown) or 2 (shadow)",
            details={"code": value, "x": x, "y": y},
        )


@dataclass(frozen=True, eq=False)
class RgbRaster:
    """8-bit RGB image, shape (height, width, 3)."""

    pixels: npt.NDArray[np.uint8]

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise RasterFormatError(f"RGB raster must have shape (height, width, 3), got {pixels.shape}")
        if pixels.dtype != np.uint8:
            if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
                raise RasterFormatError("RGB channel values must lie in [0, 255]")
            pixels = pixels.astype(np.uint8)
        object.__setattr__(self, "pixels", _readonly(pixels))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


@dataclass(frozen=True, eq=False)
class InstanceMask:
    """One connected object. Coordinates are integer pixel indices; metric positions use pixel centers."""

    id: int
    cls: LabelClass
    xs: npt.NDArray[np.int64]
    ys: npt.NDArray[np.int64]
    _centroid: tuple[float, float] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=np.int64)
        ys = np.asarray(self.ys, dtype=np.int64)
        if xs.shape != ys.shape or xs.ndim != 1:
            raise InputValidationError("instance xs/ys must be 1-D arrays of equal length")
        if xs.size == 0:
            raise InputValidationError(f"instance {self.id} has no pixels")
        object.__setattr__(self, "xs", _readonly(xs))
        object.__setattr__(self, "ys", _readonly(ys))
        object.__setattr__(self, "_centroid", (float(xs.mean()) + 0.5, float(ys.mean()) + 0.5))

    @property
    def area_px(self) -> int:
        return int(self.xs.size)

    @property
    def centroid_px(self) -> tuple[float, float]:
        """Mean pixel-center position (x + 0.5, y + 0.5)."""
        return self._centroid

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        """Half-open pixel bounds (x_min, y_min, x_max + 1, y_max + 1)."""
        return int(self.xs.min()), int(self.ys.min()), int(self.xs.max()) + 1, int(self.ys.max()) + 1

    @property
    def equivalent_radius_px(self) -> float:
        return float(np.sqrt(self.area_px / np.pi))

    def pixel_keys(self) -> npt.NDArray[np.int64]:
        """Sorted, unique integer identity per pixel; valid for rasters under 2**31 pixels per side."""
        return np.sort((self.ys << 32) | self.xs)

    def translated(self, dx: int, dy: int) -> InstanceMask:
        return InstanceMask(self.id, self.cls, self.xs + dx, self.ys + dy)


def label_image_mode(path: str | Path) -> str | None:
    """PIL mode of `path` read from the header alone, or None when it is not a decodable image."""
    try:
        with Image.open(path) as image:
            return image.mode
    except (UnidentifiedImageError, OSError):
        return None


def load_label_raster(path: str | Path) -> LabelRaster:
    image = _open_image(path)
    if image.mode not in LABEL_IMAGE_MODES:
        raise RasterFormatError(f"{path}: label raster must be a single-channel 8-bit image, got mode {image.mode}")
    # palette PNGs store indices; read the indices, not the colours
    labels = np.asarray(image)
    logger.debug("loaded label raster %s (%dx%d)", path, labels.shape[1], labels.shape[0])
    try:
        return LabelRaster(labels)
    except RasterFormatError as exc:
        raise RasterFormatError(f"{path}: {exc}", details=exc.details) from exc


def save_label_raster(raster: LabelRaster, path: str | Path) -> None:
    _save_image(Image.fromarray(np.ascontiguousarray(raster.labels)), path)


def load_rgb_raster(path: str | Path) -> RgbRaster:
    image = _open_image(path)
    if image.mode != "RGB":
        if image.mode not in {"RGBA", "P"}:
            raise RasterFormatError(f"{path}: expected an 8-bit RGB image, got mode {image.mode}")
        logger.debug("converting %s from %s to RGB", path, image.mode)
        image = image.convert("RGB")
    return RgbRaster(np.asarray(image))


def save_rgb_raster(img: RgbRaster, path: str | Path) -> None:
    _save_image(Image.fromarray(np.ascontiguousarray(img.pixels)), path)


def save_binary_mask(mask: npt.NDArray[np.bool_], path: str | Path) -> None:
    """Write a boolean mask as an 8-bit PNG, 255 where True."""
    _save_image(Image.fromarray(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)), path)


def _open_image(path: str | Path) -> Image.Image:
    try:
        with Image.open(path) as image:
            image.load()
            return image
    except FileNotFoundError as exc:
        raise RasterIOError(f"{path}: file not found") from exc
    except UnidentifiedImageError as exc:
        raise RasterFormatError(f"{path}: not a decodable image") from exc
    except OSError as exc:
        raise RasterIOError(f"{path}: {exc}") from exc


def _save_image(image: Image.Image, path: str | Path) -> None:
    try:
        image.save(path, format="PNG")
    except OSError as exc:
        raise RasterIOError(f"{path}: cannot write PNG: {exc}") from exc


def _structure(connectivity: int) -> np.ndarray:
    if connectivity not in (4, 8):
        raise InputValidationError(f"connectivity must be 4 or 8, got {connectivity}")
    return ndimage.generate_binary_structure(2, 1 if connectivity == 4 else 2)


def connected_components(
    r: LabelRaster,
    cls: LabelClass | str | int,
    connectivity: int = DEFAULT_CONNECTIVITY,
    min_area_px: int = DEFAULT_MIN_AREA_PX,
) -> list[InstanceMask]:
    """Maximal connected regions of one class, smaller ones than `min_area_px` dropped.

    Ids start at 1 and follow raster scan order of each component's first pixel.
    """
    target = LabelClass.parse(cls)
    if target is LabelClass.BACKGROUND:
        raise InputValidationError("connected components are defined for crown or shadow, not background")
    if min_area_px < 1:
        raise InputValidationError(f"min_area_px must be >= 1, got {min_area_px}")

    labelled, count = ndimage.label(r.mask(target), structure=_structure(connectivity))
    if count == 0:
        return []

    index = np.arange(1, count + 1)
    areas = np.bincount(labelled.ravel(), minlength=count + 1)[1:]
    flat_positions = np.arange(labelled.size).reshape(labelled.shape)
    first_pixel = np.asarray(ndimage.minimum(flat_positions, labels=labelled, index=index), dtype=np.int64)
    slices = ndimage.find_objects(labelled)

    instances: list[InstanceMask] = []
    dropped = 0
    for component in np.argsort(first_pixel, kind="stable"):
        if areas[component] < min_area_px:
            dropped += 1
            continue
        window = slices[component]
        local_ys, local_xs = np.nonzero(labelled[window] == component + 1)
        instances.append(
            InstanceMask(
                id=len(instances) + 1,
                cls=target,
                xs=local_xs + window[1].start,
                ys=local_ys + window[0].start,
            )
        )
    logger.debug("%s: %d components, %d kept (min_area_px=%d, connectivity=%d)", target.label, count, len(instances), min_area_px, connectivity)
    if dropped:
        logger.debug("%s: dropped %d components below %d px", target.label, dropped, min_area_px)
    return instances


def instances_from_raster(
    r: LabelRaster,
    connectivity: int = DEFAULT_CONNECTIVITY,
    min_area_px: int = DEFAULT_MIN_AREA_PX,
) -> dict[LabelClass, list[InstanceMask]]:
    return {cls: connected_components(r, cls, connectivity, min_area_px) for cls in (LabelClass.CROWN, LabelClass.SHADOW)}


def crown_area_m2(inst: InstanceMask, gt: GeoTransform) -> float:
    """Projected crown area: pixel count times pixel footprint, no boundary smoothing."""
    return inst.area_px * gt.gsd_x * gt.gsd_y


def hsv_value_channel(img: RgbRaster) -> npt.NDArray[np.float64]:
    """HSV value, max(R, G, B) / 255, per pixel."""
    return img.pixels.max(axis=2).astype(np.float64) / 255.0


def shadow_candidates(img: RgbRaster, threshold: float = DEFAULT_HSV_THRESHOLD) -> npt.NDArray[np.bool_]:
    """True where V is strictly below `threshold`; V == threshold counts as lit."""
    if not (0.0 < threshold < 1.0):
        raise InputValidationError(f"HSV threshold must lie in (0, 1), got {threshold}")
    return hsv_value_channel(img) < threshold

"""Run configuration and per-image acquisition sidecars."""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .exceptions import ConfigError, InputValidationError, SidecarError
from .mask_raster import DEFAULT_CONNECTIVITY, DEFAULT_HSV_THRESHOLD, DEFAULT_MIN_AREA_PX, GeoTransform, LabelClass
from .solar_geometry import GeoLocation, SolarPosition, UtcInstant
from .tree_metrics import (
    DEFAULT_FORM_FACTOR,
    DEFAULT_LATERAL_RADIUS_FACTOR,
    DEFAULT_MAX_GAP_M,
    DEFAULT_TRUNK_OFFSET_M,
    HeightModel,
    PairingParams,
)

logger = logging.getLogger(__name__)

ENV_CONFIG = "CANOPYVOL_CONFIG"
ISO_UTC_PATTERN = r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$"


def _first_error(exc: ValidationError) -> tuple[str, str, str]:
    error = exc.errors()[0]
    loc = ".".join(str(part) for part in error.get("loc", ())) or "<root>"
    return loc, str(error.get("type", "")), str(error.get("msg", ""))


def _check_timestamp(value: str | None) -> str | None:
    if value is not None:
        try:
            UtcInstant.from_iso(value)
        except InputValidationError as exc:
            raise ValueError(str(exc)) from exc
    return value


class AcquisitionMetadata(BaseModel):
    """JSON sidecar describing one image: pixel size, capture time (UTC) and place."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gsd_x_m: float = Field(gt=0)
    gsd_y_m: float = Field(gt=0)
    timestamp_utc: str = Field(pattern=ISO_UTC_PATTERN)
    lat_deg: float = Field(ge=-90, le=90)
    lon_deg: float = Field(ge=-180, le=180)
    sun_elevation_deg: float | None = Field(default=None, ge=-90, le=90)
    sun_azimuth_deg: float | None = None

    @field_validator("timestamp_utc")
    @classmethod
    def _valid_instant(cls, value: str) -> str:
        return _check_timestamp(value)

    @model_validator(mode="after")
    def _sun_pair(self) -> AcquisitionMetadata:
        if (self.sun_elevation_deg is None) != (self.sun_azimuth_deg is None):
            raise ValueError("sun_elevation_deg and sun_azimuth_deg must be given together")
        return self

    def geo_transform(self) -> GeoTransform:
        return GeoTransform(self.gsd_x_m, self.gsd_y_m)

    def instant(self) -> UtcInstant:
        return UtcInstant.from_iso(self.timestamp_utc)

    def location(self) -> GeoLocation:
        return GeoLocation(self.lat_deg, self.lon_deg)

    def sun_override(self) -> SolarPosition | None:
        if self.sun_elevation_deg is None or self.sun_azimuth_deg is None:
            return None
        return SolarPosition.from_angles(self.sun_elevation_deg, self.sun_azimuth_deg)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.model_dump(exclude_none=True), indent=2) + "\n", encoding="utf-8")


def parse_sidecar(payload: Any, source: str = "sidecar") -> AcquisitionMetadata:
    if not isinstance(payload, dict):
        raise SidecarError(f"{source} must contain a JSON object")
    try:
        return AcquisitionMetadata.model_validate(payload)
    except ValidationError as exc:
        field_name, error_type, message = _first_error(exc)
        if error_type == "missing":
            raise SidecarError(f"{source} is missing required field '{field_name}'", details={"field": field_name}) from exc
        raise SidecarError(f"{source} field '{field_name}': {message}", details={"field": field_name}) from exc


def read_sidecar_payload(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise SidecarError(f"sidecar not found: {path}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SidecarError(f"{path} contains invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise SidecarError(f"{path} must contain a JSON object")
    return payload


def load_sidecar(path: str | Path) -> AcquisitionMetadata:
    return parse_sidecar(read_sidecar_payload(path), str(path))


class RunConfig(BaseModel):
    """Every tunable of a run. Acquisition fields, when set, override the image sidecar."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    lat_deg: float | None = Field(default=None, ge=-90, le=90)
    lon_deg: float | None = Field(default=None, ge=-180, le=180)
    timestamp_utc: str | None = Field(default=None, pattern=ISO_UTC_PATTERN)
    gsd_x_m: float | None = Field(default=None, gt=0)
    gsd_y_m: float | None = Field(default=None, gt=0)
    sun_elevation_deg: float | None = Field(default=None, ge=-90, le=90)
    sun_azimuth_deg: float | None = None

    trunk_offset_m: float = Field(default=DEFAULT_TRUNK_OFFSET_M, ge=0)
    height_mode: Literal["paper", "physical"] = "paper"
    offset_on: Literal["height", "length"] = "height"
    form_factor_k: float = Field(default=DEFAULT_FORM_FACTOR, gt=0)

    hsv_threshold: float = Field(default=DEFAULT_HSV_THRESHOLD, gt=0, lt=1)
    connectivity: Literal[4, 8] = DEFAULT_CONNECTIVITY
    min_area_px: int = Field(default=DEFAULT_MIN_AREA_PX, ge=1)

    max_lateral_m: float | None = Field(default=None, gt=0)
    lateral_radius_factor: float = Field(default=DEFAULT_LATERAL_RADIUS_FACTOR, gt=0)
    max_gap_m: float = Field(default=DEFAULT_MAX_GAP_M, ge=0)

    miou_class_set: tuple[Literal["background", "crown", "shadow"], ...] = ("crown", "shadow")
    iou_threshold: float = Field(default=0.5, gt=0, le=1)
    workers: int = Field(default=1, ge=1)

    @field_validator("timestamp_utc")
    @classmethod
    def _valid_instant(cls, value: str | None) -> str | None:
        return _check_timestamp(value)

    @field_validator("miou_class_set")
    @classmethod
    def _non_empty_class_set(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        if not value:
            raise ValueError("must name at least one class")
        return tuple(dict.fromkeys(value))

    @model_validator(mode="after")
    def _sun_pair(self) -> RunConfig:
        if (self.sun_elevation_deg is None) != (self.sun_azimuth_deg is None):
            raise ValueError("sun_elevation_deg and sun_azimuth_deg must be given together")
        return self

    @classmethod
    def resolve(cls, file_values: dict[str, Any] | None = None, flag_values: dict[str, Any] | None = None, *, source: str = "config") -> RunConfig:
        """Merge defaults < config file < explicit flags (flags whose value is None are treated as unset)."""
        merged: dict[str, Any] = dict(file_values or {})
        merged.update({key: value for key, value in (flag_values or {}).items() if value is not None})
        try:
            return cls.model_validate(merged)
        except ValidationError as exc:
            field_name, error_type, message = _first_error(exc)
            if error_type == "extra_forbidden":
                raise ConfigError(f"{source}: unknown setting '{field_name}'", details={"field": field_name}) from exc
            raise ConfigError(f"{source}: '{field_name}' {message}", details={"field": field_name}) from exc

    def height_model(self) -> HeightModel:
        return HeightModel(mode=self.height_mode, trunk_offset_m=self.trunk_offset_m, offset_on=self.offset_on)

    def pairing(self) -> PairingParams:
        return PairingParams(max_lateral_m=self.max_lateral_m, lateral_radius_factor=self.lateral_radius_factor, max_gap_m=self.max_gap_m)

    def class_set(self) -> tuple[LabelClass, ...]:
        return tuple(LabelClass.parse(name) for name in self.miou_class_set)

    def sun_override(self) -> SolarPosition | None:
        if self.sun_elevation_deg is None or self.sun_azimuth_deg is None:
            return None
        return SolarPosition.from_angles(self.sun_elevation_deg, self.sun_azimuth_deg)

    def acquisition(self, sidecar_payload: dict[str, Any] | None, source: str = "sidecar") -> AcquisitionMetadata:
        """Raw sidecar values with this config's acquisition fields layered on top, then validated."""
        base: dict[str, Any] = dict(sidecar_payload or {})
        for key in ("gsd_x_m", "gsd_y_m", "timestamp_utc", "lat_deg", "lon_deg"):
            value = getattr(self, key)
            if value is not None:
                base[key] = value
        if self.sun_elevation_deg is not None:
            base["sun_elevation_deg"] = self.sun_elevation_deg
            base["sun_azimuth_deg"] = self.sun_azimuth_deg
        return parse_sidecar(base, source)


def config_path_from_env() -> Path | None:
    raw = os.getenv(ENV_CONFIG, "").strip()
    return Path(raw) if raw else None


def load_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} contains invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    logger.debug("loaded config file %s (%d keys)", path, len(payload))
    return payload

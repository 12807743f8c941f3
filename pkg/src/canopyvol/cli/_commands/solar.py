"""Solar position command handler."""

from __future__ import annotations

import argparse
import logging
from typing import Any

from canopyvol.config import RunConfig
from canopyvol.solar_geometry import GeoLocation, UtcInstant, solar_noon_utc, solar_position

from canopyvol.cli._output import CLIUsageError, RenderedOutput

logger = logging.getLogger(__name__)


def _cmd_solar(args: argparse.Namespace, config: RunConfig) -> RenderedOutput:
    missing = [flag for flag, value in (("--timestamp", config.timestamp_utc), ("--lat", config.lat_deg), ("--lon", config.lon_deg)) if value is None]
    if missing:
        raise CLIUsageError(
            f"solar needs {', '.join(missing)} (as flags or config file settings)",
            example="canopyvol solar --timestamp 2022-05-22T07:46:00Z --lat 43.7131 --lon 10.5825",
        )
    assert config.timestamp_utc is not None and config.lat_deg is not None and config.lon_deg is not None

    instant = UtcInstant.from_iso(config.timestamp_utc)
    location = GeoLocation(config.lat_deg, config.lon_deg)
    sp = solar_position(instant, location)
    if not sp.is_above_horizon:
        logger.info("sun is below the horizon at %s", instant.to_iso())

    data: dict[str, Any] = {
        "elevation_deg": round(sp.elevation_deg, 2),
        "azimuth_deg": round(sp.azimuth_deg, 2),
        "zenith_deg": round(sp.zenith_deg, 2),
    }
    if args.details:
        data["declination_deg"] = round(sp.declination_deg or 0.0, 2)
        data["equation_of_time_min"] = round(sp.equation_of_time_min or 0.0, 2)
        data["hour_angle_deg"] = round(sp.hour_angle_deg or 0.0, 2)
        data["solar_noon_utc"] = solar_noon_utc(instant.year, instant.month, instant.day, location).to_iso()

    lines = [f"{key}: {value:.2f}" if isinstance(value, float) else f"{key}: {value}" for key, value in data.items()]
    return RenderedOutput(data=data, text="\n".join(lines))

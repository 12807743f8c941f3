"""Sun position from UTC time and coordinates, and the shadow-cast direction in raster axes.

Low-precision NOAA formulation (Julian century → geometric mean longitude/anomaly → declination and
equation of time → hour angle). Geometric angles only: no refraction, no parallax.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from datetime import datetime, timezone

from .exceptions import GeometryError, InputValidationError

logger = logging.getLogger(__name__)

J2000_JD = 2451545.0
SECONDS_PER_DAY = 86400.0
DAYS_PER_JULIAN_CENTURY = 36525.0

_ISO_UTC = re.compile(r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})Z$")


@dataclass(frozen=True)
class GeoLocation:
    """Point on the ellipsoid in decimal degrees (north/east positive)."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat_deg <= 90.0):
            raise InputValidationError(f"lat_deg must be within [-90, 90], got {self.lat_deg}")
        if not (-180.0 <= self.lon_deg <= 180.0):
            raise InputValidationError(f"lon_deg must be within [-180, 180], got {self.lon_deg}")


@dataclass(frozen=True)
class UtcInstant:
    """Proleptic Gregorian date-time in UTC, whole seconds."""

    year: int
    month: int
    day: int
    hour: int = 0
    minute: int = 0
    second: int = 0

    def __post_init__(self) -> None:
        try:
            datetime(self.year, self.month, self.day, self.hour, self.minute, self.second)
        except (ValueError, TypeError) as exc:
            raise InputValidationError(f"invalid UTC instant {self.year:04d}-{self.month:02d}-{self.day:02d} {self.hour:02d}:{self.minute:02d}:{self.second:02d}: {exc}") from exc

    @classmethod
    def from_iso(cls, text: str) -> UtcInstant:
        """Parse `YYYY-MM-DDThh:mm:ssZ`. Offsets other than `Z` are rejected: local time is the caller's job."""
        match = _ISO_UTC.match(text.strip())
        if match is None:
            raise InputValidationError(f"timestamp must look like YYYY-MM-DDThh:mm:ssZ (UTC), got {text!r}")
        return cls(*(int(part) for part in match.groups()))

    @classmethod
    def from_datetime(cls, value: datetime) -> UtcInstant:
        if value.tzinfo is None:
            raise InputValidationError("naive datetime has no time zone; pass an aware datetime")
        utc = value.astimezone(timezone.utc)
        return cls(utc.year, utc.month, utc.day, utc.hour, utc.minute, utc.second)

    def to_datetime(self) -> datetime:
        return datetime(self.year, self.month, self.day, self.hour, self.minute, self.second, tzinfo=timezone.utc)

    def to_iso(self) -> str:
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}T{self.hour:02d}:{self.minute:02d}:{self.second:02d}Z"

    @property
    def minutes_of_day(self) -> float:
        return self.hour * 60.0 + self.minute + self.second / 60.0


@dataclass(frozen=True)
class SolarPosition:
    """Apparent sun direction. Azimuth clockwise from true north in [0, 360)."""

    elevation_deg: float
    azimuth_deg: float
    declination_deg: float | None = None
    equation_of_time_min: float | None = None
    hour_angle_deg: float | None = None

    def __post_init__(self) -> None:
        if not (-90.0 <= self.elevation_deg <= 90.0):
            raise InputValidationError(f"elevation_deg must be within [-90, 90], got {self.elevation_deg}")
        if not (0.0 <= self.azimuth_deg < 360.0):
            raise InputValidationError(f"azimuth_deg must be within [0, 360), got {self.azimuth_deg}")

    @property
    def zenith_deg(self) -> float:
        return 90.0 - self.elevation_deg

    @classmethod
    def from_angles(cls, elevation_deg: float, azimuth_deg: float) -> SolarPosition:
        """Sun position supplied from outside the ephemeris (field notes, a solar calculator)."""
        return cls(elevation_deg=float(elevation_deg), azimuth_deg=_wrap_degrees(float(azimuth_deg)))

    @property
    def is_above_horizon(self) -> bool:
        return self.elevation_deg > 0.0


def _wrap_degrees(value: float) -> float:
    wrapped = value % 360.0
    # -1e-17 % 360 rounds up to 360.0
    return 0.0 if wrapped >= 360.0 else wrapped


def julian_day(t: UtcInstant) -> float:
    """Astronomical Julian Date of a UTC instant (Meeus, Gregorian calendar throughout)."""
    year, month = t.year, t.month
    if month <= 2:
        year -= 1
        month += 12
    century = year // 100
    gregorian_shift = 2 - century + century // 4
    day_number = math.floor(365.25 * (year + 4716)) + math.floor(30.6001 * (month + 1)) + t.day + gregorian_shift - 1524.5
    return day_number + (t.hour * 3600 + t.minute * 60 + t.second) / SECONDS_PER_DAY


def _sun_terms(jd: float) -> tuple[float, float]:
    """Return (declination_deg, equation_of_time_min) for a Julian Date."""
    jc = (jd - J2000_JD) / DAYS_PER_JULIAN_CENTURY

    mean_long = (280.46646 + jc * (36000.76983 + jc * 0.0003032)) % 360.0
    mean_anom = 357.52911 + jc * (35999.05029 - 0.0001537 * jc)
    eccent = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc)

    mean_anom_rad = math.radians(mean_anom)
    eq_of_center = (
        math.sin(mean_anom_rad) * (1.914602 - jc * (0.004817 + 0.000014 * jc))
        + math.sin(2 * mean_anom_rad) * (0.019993 - 0.000101 * jc)
        + math.sin(3 * mean_anom_rad) * 0.000289
    )
    true_long = mean_long + eq_of_center
    omega = math.radians(125.04 - 1934.136 * jc)
    apparent_long = true_long - 0.00569 - 0.00478 * math.sin(omega)

    mean_obliq = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0
    obliq = mean_obliq + 0.00256 * math.cos(omega)

    declination = math.degrees(math.asin(math.sin(math.radians(obliq)) * math.sin(math.radians(apparent_long))))

    y = math.tan(math.radians(obliq / 2.0)) ** 2
    mean_long_rad = math.radians(mean_long)
    eq_of_time = 4.0 * math.degrees(
        y * math.sin(2 * mean_long_rad)
        - 2 * eccent * math.sin(mean_anom_rad)
        + 4 * eccent * y * math.sin(mean_anom_rad) * math.cos(2 * mean_long_rad)
        - 0.5 * y * y * math.sin(4 * mean_long_rad)
        - 1.25 * eccent * eccent * math.sin(2 * mean_anom_rad)
    )
    return declination, eq_of_time


def solar_position(t: UtcInstant, loc: GeoLocation) -> SolarPosition:
    """Geometric solar elevation/azimuth at `t` seen from `loc`.

    Below-horizon instants return a negative elevation rather than raising.
    """
    declination, eq_of_time = _sun_terms(julian_day(t))

    true_solar_time = (t.minutes_of_day + eq_of_time + 4.0 * loc.lon_deg) % 1440.0
    hour_angle = true_solar_time / 4.0 - 180.0
    if hour_angle < -180.0:
        hour_angle += 360.0

    lat = math.radians(loc.lat_deg)
    dec = math.radians(declination)
    ha = math.radians(hour_angle)

    sin_elev = math.sin(lat) * math.sin(dec) + math.cos(lat) * math.cos(dec) * math.cos(ha)
    elevation = math.degrees(math.asin(min(1.0, max(-1.0, sin_elev))))
    azimuth = math.degrees(
        math.atan2(
            -math.sin(ha) * math.cos(dec),
            math.sin(dec) * math.cos(lat) - math.cos(dec) * math.sin(lat) * math.cos(ha),
        )
    )

    position = SolarPosition(
        elevation_deg=elevation,
        azimuth_deg=_wrap_degrees(azimuth),
        declination_deg=declination,
        equation_of_time_min=eq_of_time,
        hour_angle_deg=hour_angle,
    )
    logger.debug("sun at %s (%.4f, %.4f): elevation=%.3f azimuth=%.3f", t.to_iso(), loc.lat_deg, loc.lon_deg, position.elevation_deg, position.azimuth_deg)
    return position


def solar_noon_utc(year: int, month: int, day: int, loc: GeoLocation) -> UtcInstant:
    """UTC instant, to the nearest second, when the hour angle at `loc` crosses zero."""
    midnight_jd = julian_day(UtcInstant(year, month, day))
    noon_min = 720.0 - 4.0 * loc.lon_deg
    # equation of time drifts < 1 s over one correction; two passes settle it
    for _ in range(2):
        _, eq_of_time = _sun_terms(midnight_jd + noon_min / 1440.0)
        noon_min = 720.0 - 4.0 * loc.lon_deg - eq_of_time
    return _instant_from_minutes(year, month, day, noon_min)


def _instant_from_minutes(year: int, month: int, day: int, minutes: float) -> UtcInstant:
    total = round(minutes * 60.0)
    if not 0 <= total < 86400:
        raise InputValidationError(f"solar noon at longitude falls outside the UTC day {year:04d}-{month:02d}-{day:02d}")
    return UtcInstant(year, month, day, total // 3600, (total % 3600) // 60, total % 60)


def shadow_direction_vector(sp: SolarPosition) -> tuple[float, float]:
    """Unit vector from a tree base toward its shadow tip, x east / y south (north-up raster)."""
    if not sp.is_above_horizon:
        raise GeometryError(f"no shadow geometry: sun at or below the horizon (elevation {sp.elevation_deg:.2f} deg)")
    anti_solar = math.radians(sp.azimuth_deg + 180.0)
    dx, dy = math.sin(anti_solar), -math.cos(anti_solar)
    norm = math.hypot(dx, dy)
    return dx / norm, dy / norm

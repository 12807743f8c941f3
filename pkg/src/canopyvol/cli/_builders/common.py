"""Shared CLI builder helpers."""

from __future__ import annotations

import argparse
from textwrap import dedent
from typing import Any

from canopyvol.config import RunConfig

from canopyvol.cli._parsers import _parse_class_list

_DEFAULTS = RunConfig()


def _format_default_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(item) for item in value)
    return str(value)


class RichHelpFormatter(argparse.RawTextHelpFormatter):
    """Help formatter with raw newlines for curated examples and notes."""

    def _get_help_string(self, action: argparse.Action) -> str | None:
        help_text = action.help
        if help_text is argparse.SUPPRESS:
            return help_text
        if not isinstance(help_text, str):
            return help_text

        display_default = getattr(action, "display_default", None)
        if display_default is None and isinstance(action.default, bool):
            display_default = _format_default_value(action.default)

        if display_default is not None and "default:" not in help_text.lower():
            return f"{help_text} Default: {display_default}."
        return help_text


def _section(title: str, lines: list[str]) -> str:
    if not lines:
        return ""
    return f"{title}:\n" + "\n".join(f"  {line}" for line in lines)


def rich_parser_kwargs(
    description: str,
    *,
    examples: list[str] | None = None,
    notes: list[str] | None = None,
    fixes: list[str] | None = None,
) -> dict[str, object]:
    sections = [section for section in [_section("Examples", examples or []), _section("Inputs and Outputs", notes or []), _section("Common Fixes", fixes or [])] if section]
    return {
        "description": dedent(description).strip(),
        "epilog": "\n\n".join(sections) if sections else None,
        "formatter_class": RichHelpFormatter,
    }


def _add_config_argument(parser: argparse._ActionsContainer, option: str, *, field: str, help_text: str, **kwargs: Any) -> None:
    """Flag bound to a RunConfig field; parsed value None means 'not given' so config files can fill it."""
    action = parser.add_argument(option, dest=field, default=None, help=help_text, **kwargs)
    default = getattr(_DEFAULTS, field)
    action.display_default = "not set" if default is None else _format_default_value(default)


def add_location_arguments(parser: argparse._ActionsContainer) -> None:
    _add_config_argument(parser, "--lat", field="lat_deg", type=float, help_text="Latitude in degrees, north positive.")
    _add_config_argument(parser, "--lon", field="lon_deg", type=float, help_text="Longitude in degrees, east positive.")


def add_timestamp_argument(parser: argparse._ActionsContainer) -> None:
    _add_config_argument(parser, "--timestamp", field="timestamp_utc", help_text="Capture instant in UTC, YYYY-MM-DDThh:mm:ssZ.")


def add_sun_override_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("sun override")
    _add_config_argument(group, "--sun-elevation", field="sun_elevation_deg", type=float, help_text="Use this sun elevation instead of the ephemeris (with --sun-azimuth).")
    _add_config_argument(group, "--sun-azimuth", field="sun_azimuth_deg", type=float, help_text="Use this sun azimuth, clockwise from north (with --sun-elevation).")


def add_acquisition_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("acquisition overrides (win over the sidecar)")
    add_location_arguments(group)
    add_timestamp_argument(group)
    group.add_argument("--gsd", dest="gsd_m", type=float, default=None, help="Square pixel size in meters (sets both axes).")
    _add_config_argument(group, "--gsd-x", field="gsd_x_m", type=float, help_text="Pixel width in meters.")
    _add_config_argument(group, "--gsd-y", field="gsd_y_m", type=float, help_text="Pixel height in meters.")


def add_segmentation_arguments(parser: argparse.ArgumentParser) -> None:
    _add_config_argument(parser, "--connectivity", field="connectivity", type=int, choices=(4, 8), help_text="Pixel neighbourhood for connected components.")
    _add_config_argument(parser, "--min-area", field="min_area_px", type=int, help_text="Drop components smaller than this many pixels.")


def add_height_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("height and biovolume")
    _add_config_argument(group, "--height-mode", field="height_mode", choices=("paper", "physical"), help_text="paper: L_s / tan(elevation); physical: L_s * tan(elevation).")
    _add_config_argument(group, "--trunk-offset", field="trunk_offset_m", type=float, help_text="Meters subtracted from the estimate (bare trunk below the crown).")
    _add_config_argument(group, "--offset-on", field="offset_on", choices=("height", "length"), help_text="Apply the trunk offset to the height or to the shadow length.")
    _add_config_argument(group, "--form-factor", field="form_factor_k", type=float, help_text="Biovolume form factor k in V = k * A * H.")


def add_pairing_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("crown/shadow pairing")
    _add_config_argument(group, "--max-lateral", field="max_lateral_m", type=float, help_text="Maximum sideways offset of a shadow from the crown axis, meters. Unset: radius factor times crown radius.")
    _add_config_argument(group, "--lateral-radius-factor", field="lateral_radius_factor", type=float, help_text="Lateral limit as a multiple of the crown's equivalent radius.")
    _add_config_argument(group, "--max-gap", field="max_gap_m", type=float, help_text="Maximum distance along the shadow direction from the crown centroid to the nearest shadow pixel inside the lateral window, meters.")


def add_class_set_argument(parser: argparse.ArgumentParser) -> None:
    _add_config_argument(parser, "--classes", field="miou_class_set", type=_parse_class_list, help_text="Comma-separated classes averaged into macro scores and mIoU.")


def add_workers_argument(parser: argparse.ArgumentParser) -> None:
    _add_config_argument(parser, "--workers", field="workers", type=int, help_text="Images processed concurrently in directory mode.")

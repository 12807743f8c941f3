"""Synthetic scene command handler."""

from __future__ import annotations

import argparse
import logging

from canopyvol.config import AcquisitionMetadata, RunConfig
from canopyvol.mask_raster import save_label_raster, save_rgb_raster
from canopyvol.solar_geometry import SolarPosition
from canopyvol.synth_oracle import random_scene, render_scene, write_ground_truth_csv

from canopyvol.cli._parsers import _ensure_out_dir

logger = logging.getLogger(__name__)

DEFAULT_SYNTH_GSD_M = 0.05
DEFAULT_SYNTH_EXTENT_M = (40.0, 40.0)
DEFAULT_SYNTH_SUN = (60.0, 135.0)
# acquisition written to the sidecar when none is configured
DEFAULT_SYNTH_TIMESTAMP = "2022-05-22T07:46:00Z"
DEFAULT_SYNTH_LOCATION = (43.7131, 10.5825)


def _cmd_synth(args: argparse.Namespace, config: RunConfig) -> dict[str, object]:
    out_dir = _ensure_out_dir(args.out_dir, "--out-dir")
    gsd = args.gsd_m if args.gsd_m is not None else DEFAULT_SYNTH_GSD_M
    extent = args.extent or DEFAULT_SYNTH_EXTENT_M
    sun = config.sun_override() or SolarPosition.from_angles(*DEFAULT_SYNTH_SUN)

    scene = random_scene(args.trees, extent, gsd, sun, args.seed, height_mode=config.height_mode)
    labels, rgb = render_scene(scene)

    stem = args.stem or f"scene_{args.seed:04d}"
    files = {
        "labels": out_dir / f"{stem}_labels.png",
        "rgb": out_dir / f"{stem}_rgb.png",
        "sidecar": out_dir / f"{stem}_labels.json",
        "truth": out_dir / f"{stem}_truth.csv",
    }
    save_label_raster(labels, files["labels"])
    save_rgb_raster(rgb, files["rgb"])
    AcquisitionMetadata(
        gsd_x_m=gsd,
        gsd_y_m=gsd,
        timestamp_utc=config.timestamp_utc or DEFAULT_SYNTH_TIMESTAMP,
        lat_deg=config.lat_deg if config.lat_deg is not None else DEFAULT_SYNTH_LOCATION[0],
        lon_deg=config.lon_deg if config.lon_deg is not None else DEFAULT_SYNTH_LOCATION[1],
        sun_elevation_deg=sun.elevation_deg,
        sun_azimuth_deg=sun.azimuth_deg,
    ).dump(files["sidecar"])
    write_ground_truth_csv(scene, files["truth"])
    logger.debug("wrote synthetic scene %s with %d trees", stem, len(scene.trees))

    return {
        "files": {key: str(path) for key, path in files.items()},
        "trees": len(scene.trees),
        "seed": scene.seed,
        "width_px": scene.width_px,
        "height_px": scene.height_px,
        "gsd_m": gsd,
        "height_mode": scene.height_mode.value,
        "sun": {"elevation_deg": sun.elevation_deg, "azimuth_deg": sun.azimuth_deg},
    }

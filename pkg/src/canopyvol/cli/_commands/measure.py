"""Tree inventory command handler."""

from __future__ import annotations

import argparse
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from canopyvol.config import RunConfig, read_sidecar_payload
from canopyvol.mask_raster import LABEL_IMAGE_MODES, label_image_mode, load_label_raster
from canopyvol.tree_metrics import (
    SceneMeasurement,
    inventory_summary,
    measure_scene_detailed,
    records_to_csv,
    records_to_json,
    write_records_csv,
    write_records_json,
)

from canopyvol.cli._output import CLIUsageError, RenderedOutput
from canopyvol.cli._parsers import _ensure_out_dir, _png_files, _require_file, _require_file_or_dir

logger = logging.getLogger(__name__)

ACQUISITION_FIELDS = ("gsd_x_m", "gsd_y_m", "timestamp_utc", "lat_deg", "lon_deg")


@dataclass(frozen=True)
class _ImageJob:
    labels: Path
    sidecar: Path | None


@dataclass(frozen=True)
class _ImageResult:
    name: str
    measurement: SceneMeasurement


def _default_sidecar(labels: Path) -> Path:
    return labels.with_suffix(".json")


def _measure_one(job: _ImageJob, config: RunConfig, out_dir: Path | None) -> _ImageResult:
    if job.sidecar is not None:
        payload = read_sidecar_payload(job.sidecar)
        source = str(job.sidecar)
    else:
        payload = None
        source = f"acquisition settings for {job.labels.name}"
    meta = config.acquisition(payload, source)

    raster = load_label_raster(job.labels)
    measurement = measure_scene_detailed(
        raster,
        meta.geo_transform(),
        meta.instant(),
        meta.location(),
        config.height_model(),
        config.pairing(),
        form_factor=config.form_factor_k,
        connectivity=config.connectivity,
        min_area_px=config.min_area_px,
        sun=meta.sun_override(),
    )
    if out_dir is not None:
        write_records_csv(measurement.records, out_dir / f"{job.labels.stem}.trees.csv")
        write_records_json(measurement.records, out_dir / f"{job.labels.stem}.trees.json", warnings=measurement.warnings)
    logger.debug("%s: %d trees, %d warnings", job.labels.name, len(measurement.records), len(measurement.warnings))
    return _ImageResult(job.labels.name, measurement)


def _directory_jobs(directory: Path, config: RunConfig) -> list[_ImageJob]:
    config_complete = all(getattr(config, name) is not None for name in ACQUISITION_FIELDS)
    jobs: list[_ImageJob] = []
    for labels in _png_files(directory):
        mode = label_image_mode(labels)
        if mode not in LABEL_IMAGE_MODES:
            logger.warning("%s: not a single-channel label image (mode %s), skipped", labels.name, mode or "unreadable")
            continue
        sidecar = _default_sidecar(labels)
        if sidecar.is_file():
            jobs.append(_ImageJob(labels, sidecar))
        elif config_complete:
            jobs.append(_ImageJob(labels, None))
        else:
            logger.warning("%s: no sidecar %s, skipped", labels.name, sidecar.name)
    return jobs


def _image_data(result: _ImageResult) -> dict[str, Any]:
    m = result.measurement
    return {
        "image": result.name,
        "sun": {"elevation_deg": round(m.sun.elevation_deg, 2), "azimuth_deg": round(m.sun.azimuth_deg, 2)},
        "trees": records_to_json(m.records),
        "warnings": list(m.warnings),
        "summary": inventory_summary(m.records),
    }


def _cmd_measure(args: argparse.Namespace, config: RunConfig) -> RenderedOutput:
    source = _require_file_or_dir(args.labels, "--labels")
    out_dir = _ensure_out_dir(args.out, "--out") if args.out else None

    if source.is_dir():
        if args.sidecar:
            raise CLIUsageError("--sidecar applies to a single label image; in directory mode each <stem>.png uses <stem>.json")
        jobs = _directory_jobs(source, config)
    else:
        if args.sidecar:
            sidecar: Path | None = _require_file(args.sidecar, "--sidecar")
        else:
            candidate = _default_sidecar(source)
            sidecar = candidate if candidate.is_file() else None
        jobs = [_ImageJob(source, sidecar)]

    # map() keeps job order, so output stays lexicographic whatever finishes first
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(lambda job: _measure_one(job, config, out_dir), jobs))

    if not source.is_dir():
        only = results[0]
        return RenderedOutput(data=_image_data(only), text=records_to_csv(only.measurement.records))

    all_records = [rec for result in results for rec in result.measurement.records]
    data = {"images": [_image_data(result) for result in results], "summary": inventory_summary(all_records)}
    blocks = [f"# image: {result.name}\n{records_to_csv(result.measurement.records)}" for result in results]
    return RenderedOutput(data=data, text="".join(blocks) or "# no images measured\n")

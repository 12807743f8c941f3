"""Shadow candidate mask command handler."""

from __future__ import annotations

import argparse

import numpy as np

from canopyvol.config import RunConfig
from canopyvol.mask_raster import load_rgb_raster, save_binary_mask, shadow_candidates

from canopyvol.cli._parsers import _require_file


def _cmd_shadowmask(args: argparse.Namespace, config: RunConfig) -> dict[str, object]:
    rgb_path = _require_file(args.rgb, "--rgb")
    img = load_rgb_raster(rgb_path)
    mask = shadow_candidates(img, config.hsv_threshold)
    save_binary_mask(mask, args.out)
    shadow_px = int(np.count_nonzero(mask))
    return {
        "input": str(rgb_path),
        "output": args.out,
        "threshold": config.hsv_threshold,
        "width": img.width,
        "height": img.height,
        "shadow_pixels": shadow_px,
        "shadow_fraction": round(shadow_px / mask.size, 4) if mask.size else 0.0,
    }

"""Dataset split command handler."""

from __future__ import annotations

import argparse
from pathlib import Path

from canopyvol.config import RunConfig
from canopyvol.exceptions import RasterIOError
from canopyvol.synth_oracle import DEFAULT_SPLIT_RATIOS, monte_carlo_split

from canopyvol.cli._parsers import _ensure_out_dir, _require_file


def _read_list(path: Path) -> list[str]:
    return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _write_list(items: list[str], path: Path) -> None:
    try:
        path.write_text("".join(f"{item}\n" for item in items), encoding="utf-8")
    except OSError as exc:
        raise RasterIOError(f"{path}: cannot write list: {exc}") from exc


def _cmd_split(args: argparse.Namespace, config: RunConfig) -> dict[str, object]:
    items = _read_list(_require_file(args.list, "--list"))
    out_dir = _ensure_out_dir(args.out_dir, "--out-dir")
    ratios = args.ratios or DEFAULT_SPLIT_RATIOS

    result = monte_carlo_split(items, ratios, args.seed)
    files: dict[str, str] = {}
    counts: dict[str, int] = {}
    for name, subset in zip(("train", "val", "test"), result, strict=True):
        path = out_dir / f"{name}.txt"
        _write_list(subset, path)
        files[name] = str(path)
        counts[name] = len(subset)
    return {"items": len(items), "seed": args.seed, "ratios": list(ratios), "counts": counts, "files": files}

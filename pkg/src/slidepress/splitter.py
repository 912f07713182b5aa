"""Split a slide into fixed-size analysis tiles with empty-tile filtering.

Tiles are named by grid position (rows as letters, columns as 1-based
numbers: A1, A2, ... B1 ...). Two filters decide whether a tile carries
signal: an intensity filter for dark/fluorescent backgrounds (mean luma
plus the fraction of bright pixels) and a compression filter for white
brightfield backgrounds (JPEG size ratio: featureless tiles compress
away). Filtered tiles are still written, under ``empty_tiles/``, and
every measurement lands in ``log.txt`` so thresholds can be re-tuned
offline.
"""

from __future__ import annotations

import os
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

from . import kernels
from .errors import IoError, ParseError, UnknownKey
from .jpegcodec import encode_jpeg
from .properties import parse_properties
from .slide import Region, SlideSource


class Algorithm(str, Enum):
    NONE = "none"
    INTENSITY = "intensity"
    COMPRESSION = "compression"


class Verdict(str, Enum):
    KEPT = "kept"
    EMPTY = "empty"


@dataclass(frozen=True)
class EmptinessPolicy:
    algorithm: Algorithm = Algorithm.NONE
    dark_threshold: int = 20
    signal_threshold: int = 60
    min_signal_fraction: float = 0.005
    jpeg_quality: int = 75
    ratio_threshold: float = 0.02

    def validate(self) -> None:
        if not 0 <= self.dark_threshold <= 255:
            raise ValueError("dark_threshold outside 0..255")
        if not 0 <= self.signal_threshold <= 255:
            raise ValueError("signal_threshold outside 0..255")
        if self.dark_threshold >= self.signal_threshold:
            raise ValueError("dark_threshold must be below signal_threshold")
        if not 0 <= self.min_signal_fraction <= 1:
            raise ValueError("min_signal_fraction outside 0..1")
        if not 1 <= self.jpeg_quality <= 100:
            raise ValueError("jpeg_quality outside 1..100")
        if not 0 <= self.ratio_threshold < 1:
            raise ValueError("ratio_threshold outside [0, 1)")


@dataclass(frozen=True)
class TileScore:
    mean_luminance: float | None = None
    signal_fraction: float | None = None
    ratio: float | None = None


@dataclass(frozen=True)
class TileRecord:
    name: str
    region: Region
    verdict: Verdict
    score: TileScore
    output_path: Path


@dataclass(frozen=True)
class TileGrid:
    columns: int
    rows: int
    magnification: float
    cells: tuple[Region, ...]  # row-major

    def cell(self, row: int, column: int) -> Region:
        return self.cells[row * self.columns + column]


@dataclass
class SplitRequest:
    source: SlideSource
    output_dir: Path
    tile_width: int = 512
    tile_height: int = 512
    magnification: float | None = None  # None = native objective power
    policy: EmptinessPolicy = field(default_factory=EmptinessPolicy)
    max_workers: int = 4


def tile_name(row: int, column: int) -> str:
    """Grid label: bijective base-26 row letters + 1-based column."""
    if row < 0 or column < 0:
        raise ValueError("row and column must be non-negative")
    letters = ""
    n = row + 1
    while n:
        n, rem = divmod(n - 1, 26)
        letters = chr(ord("A") + rem) + letters
    return f"{letters}{column + 1}"


def plan_grid(request: SplitRequest) -> TileGrid:
    if request.tile_width < 16 or request.tile_height < 16:
        raise ValueError("tile dimensions must be >= 16")
    m = (
        request.magnification
        if request.magnification is not None
        else request.source.objective_power
    )
    level_w, level_h = request.source.dimensions_at(m)
    tw, th = request.tile_width, request.tile_height
    columns = -(-level_w // tw)
    rows = -(-level_h // th)
    cells = []
    for row in range(rows):
        for col in range(columns):
            x = col * tw
            y = row * th
            cells.append(
                Region(x, y, min(tw, level_w - x), min(th, level_h - y), m)
            )
    return TileGrid(columns=columns, rows=rows, magnification=m, cells=tuple(cells))


def classify_intensity(
    tile: np.ndarray, policy: EmptinessPolicy
) -> tuple[Verdict, TileScore]:
    """Empty when the tile is dark overall and almost nothing clears the
    signal threshold."""
    if policy.algorithm is not Algorithm.INTENSITY:
        raise ValueError("policy.algorithm must be intensity")
    mean_lum, signal_fraction = kernels.luminance_stats(
        tile, policy.signal_threshold
    )
    empty = (
        mean_lum < policy.dark_threshold
        and signal_fraction < policy.min_signal_fraction
    )
    return (
        Verdict.EMPTY if empty else Verdict.KEPT,
        TileScore(mean_luminance=mean_lum, signal_fraction=signal_fraction),
    )


def classify_compression(
    tile: np.ndarray, policy: EmptinessPolicy
) -> tuple[Verdict, TileScore]:
    """Empty when JPEG squeezes the tile below the size-ratio threshold
    (a mostly-white tile compresses to almost nothing)."""
    if policy.algorithm is not Algorithm.COMPRESSION:
        raise ValueError("policy.algorithm must be compression")
    encoded = encode_jpeg(np.ascontiguousarray(tile), policy.jpeg_quality)
    ratio = len(encoded) / (tile.shape[0] * tile.shape[1] * 3)
    verdict = Verdict.EMPTY if ratio < policy.ratio_threshold else Verdict.KEPT
    return verdict, TileScore(ratio=ratio)


def classify(tile: np.ndarray, policy: EmptinessPolicy) -> tuple[Verdict, TileScore]:
    if policy.algorithm is Algorithm.NONE:
        return Verdict.KEPT, TileScore()
    if policy.algorithm is Algorithm.INTENSITY:
        return classify_intensity(tile, policy)
    return classify_compression(tile, policy)


EMPTY_DIR_NAME = "empty_tiles"
LOG_NAME = "log.txt"
LOG_HEADER = "name,x,y,width,height,algorithm,mean_luminance,signal_fraction,ratio,verdict"


def _log_line(record: TileRecord, algorithm: Algorithm) -> str:
    s = record.score
    fmt = lambda v: "" if v is None else repr(v)
    r = record.region
    return (
        f"{record.name},{r.x},{r.y},{r.width},{r.height},{algorithm.value},"
        f"{fmt(s.mean_luminance)},{fmt(s.signal_fraction)},{fmt(s.ratio)},"
        f"{record.verdict.value}"
    )


def split_slide(request: SplitRequest) -> list[TileRecord]:
    """Extract, classify and write every tile; returns records in grid
    order. Any per-tile failure aborts the split and removes the partial
    output directory."""
    request.policy.validate()
    grid = plan_grid(request)
    src = request.source
    stem = src.path.stem
    out_root = Path(request.output_dir)
    final_dir = out_root / stem
    if final_dir.exists():
        raise IoError(f"output directory {final_dir} already exists")
    work_dir = out_root / f".{stem}.partial"

    def produce(index: int) -> tuple[TileRecord, str]:
        row, col = divmod(index, grid.columns)
        region = grid.cells[index]
        tile = src.read_region(region)
        verdict, score = classify(tile, request.policy)
        name = tile_name(row, col)
        rel = (
            Path(EMPTY_DIR_NAME) / f"{name}.tif"
            if verdict is Verdict.EMPTY
            else Path(f"{name}.tif")
        )
        target = work_dir / rel
        target.parent.mkdir(exist_ok=True)
        Image.fromarray(tile).save(target, format="TIFF")
        record = TileRecord(
            name=name,
            region=region,
            verdict=verdict,
            score=score,
            output_path=final_dir / rel,
        )
        return record, _log_line(record, request.policy.algorithm)

    try:
        if work_dir.exists():
            shutil.rmtree(work_dir)
        work_dir.mkdir(parents=True)
        with ThreadPoolExecutor(max_workers=max(1, request.max_workers)) as pool:
            results = list(pool.map(produce, range(len(grid.cells))))
        records = [rec for rec, _ in results]
        log_lines = [LOG_HEADER] + [line for _, line in results]
        (work_dir / LOG_NAME).write_text("\n".join(log_lines) + "\n")
        os.rename(work_dir, final_dir)
    except Exception:
        shutil.rmtree(work_dir, ignore_errors=True)
        raise
    return records


# ---------------------------------------------------------------------------
# properties-file configuration (NDPIsplitter.properties style)

SPLIT_CONFIG_KEYS = frozenset(
    {
        "tile_width",
        "tile_height",
        "magnification",
        "empty_filter",
        "dark_threshold",
        "signal_threshold",
        "min_signal_fraction",
        "jpeg_quality",
        "ratio_threshold",
        "output_dir",
    }
)


@dataclass
class SplitSettings:
    tile_width: int = 512
    tile_height: int = 512
    magnification: float | None = None
    policy: EmptinessPolicy = field(default_factory=EmptinessPolicy)
    output_dir: Path = Path(".")


def load_split_settings(path: str | Path) -> SplitSettings:
    path = Path(path)
    raw = parse_properties(path)
    unknown = set(raw) - SPLIT_CONFIG_KEYS
    if unknown:
        raise UnknownKey(f"{path}: unknown keys {sorted(unknown)}")
    settings = SplitSettings()
    policy = settings.policy

    def num(key, conv):
        try:
            return conv(raw[key])
        except ValueError as exc:
            raise ParseError(f"{path}: bad value for {key}: {raw[key]!r}") from exc

    if "tile_width" in raw:
        settings.tile_width = num("tile_width", int)
    if "tile_height" in raw:
        settings.tile_height = num("tile_height", int)
    if "magnification" in raw:
        settings.magnification = num("magnification", float)
    if "output_dir" in raw:
        settings.output_dir = (path.parent / raw["output_dir"]).resolve()
    if "empty_filter" in raw:
        try:
            policy = replace(policy, algorithm=Algorithm(raw["empty_filter"]))
        except ValueError as exc:
            raise ParseError(
                f"{path}: empty_filter must be none|intensity|compression"
            ) from exc
    for key, conv in (
        ("dark_threshold", int),
        ("signal_threshold", int),
        ("min_signal_fraction", float),
        ("jpeg_quality", int),
        ("ratio_threshold", float),
    ):
        if key in raw:
            policy = replace(policy, **{key: num(key, conv)})
    policy.validate()
    settings.policy = policy
    return settings

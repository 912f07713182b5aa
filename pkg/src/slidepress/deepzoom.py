"""Deep Zoom (DZI) pyramids: descriptor, tiled level tree, validator.

Level n has dimensions ceil(image / 2^(max_level - n)); level 0 is
always 1x1. Tiles overlap their neighbors by ``overlap`` pixels on
interior edges so a viewer can blend adjacent tiles seamlessly. Levels
are derived finest-to-coarsest by exact 2x2 averaging, so total work is
linear in the input pixels and rebuilds are byte-identical.

The "png" format exists for tests that need lossless levels; production
output is JPEG.
"""

from __future__ import annotations

import io
import shutil
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import kernels
from .errors import EncodeError, IoError, NotAPyramid
from .jpegcodec import SUBSAMPLING_420
from .slide import Region, SlideSource

DZI_NAMESPACE = "http://schemas.microsoft.com/deepzoom/2008"

DEFAULT_TILE_SIZE = 254
DEFAULT_OVERLAP = 1
DEFAULT_JPEG_QUALITY = 85
# levels at or below this dimension are stored near-losslessly: they
# cost almost nothing and relative JPEG error explodes on tiny rasters
LOSSLESS_BOOST_DIM = 256


@dataclass(frozen=True)
class DziPyramid:
    image_width: int
    image_height: int
    tile_size: int = DEFAULT_TILE_SIZE
    overlap: int = DEFAULT_OVERLAP
    format: str = "jpg"

    def __post_init__(self):
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.tile_size < 1:
            raise ValueError("tile_size must be >= 1")
        if not 0 <= self.overlap < self.tile_size:
            raise ValueError("overlap must satisfy 0 <= overlap < tile_size")
        if self.format not in ("jpg", "png"):
            raise ValueError("format must be jpg or png")

    @property
    def max_level(self) -> int:
        return (max(self.image_width, self.image_height) - 1).bit_length()

    def level_dimensions(self, level: int) -> tuple[int, int]:
        if not 0 <= level <= self.max_level:
            raise ValueError(f"level {level} outside 0..{self.max_level}")
        shift = self.max_level - level
        return (
            -(-self.image_width // (1 << shift)),
            -(-self.image_height // (1 << shift)),
        )

    def level_tiles(self, level: int) -> tuple[int, int]:
        w, h = self.level_dimensions(level)
        return -(-w // self.tile_size), -(-h // self.tile_size)

    def tile_bounds(self, level: int, col: int, row: int) -> tuple[int, int, int, int]:
        """Pixel extent (x0, y0, x1, y1) of a tile, overlap included."""
        w, h = self.level_dimensions(level)
        cols, rows = self.level_tiles(level)
        if not (0 <= col < cols and 0 <= row < rows):
            raise ValueError(f"tile {col}_{row} outside {cols}x{rows} at level {level}")
        ts, ov = self.tile_size, self.overlap
        x0 = max(0, col * ts - ov)
        y0 = max(0, row * ts - ov)
        x1 = min(w, (col + 1) * ts + ov)
        y1 = min(h, (row + 1) * ts + ov)
        return x0, y0, x1, y1


@dataclass(frozen=True)
class LevelSpec:
    level: int
    width: int
    height: int
    columns: int
    rows: int


def plan_pyramid(
    width: int,
    height: int,
    tile_size: int = DEFAULT_TILE_SIZE,
    overlap: int = DEFAULT_OVERLAP,
    format: str = "jpg",
) -> tuple[DziPyramid, list[LevelSpec]]:
    pyramid = DziPyramid(width, height, tile_size, overlap, format)
    specs = []
    for level in range(pyramid.max_level + 1):
        w, h = pyramid.level_dimensions(level)
        cols, rows = pyramid.level_tiles(level)
        specs.append(LevelSpec(level, w, h, cols, rows))
    return pyramid, specs


def descriptor_xml(pyramid: DziPyramid) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8"?>'
        f'<Image TileSize="{pyramid.tile_size}" Overlap="{pyramid.overlap}" '
        f'Format="{pyramid.format}" xmlns="{DZI_NAMESPACE}">'
        f'<Size Width="{pyramid.image_width}" Height="{pyramid.image_height}"/>'
        "</Image>"
    )


def write_descriptor(pyramid: DziPyramid, path: str | Path) -> None:
    try:
        Path(path).write_text(descriptor_xml(pyramid), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def parse_descriptor(text: str) -> DziPyramid:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise NotAPyramid(f"descriptor is not well-formed XML: {exc}") from exc
    if root.tag != f"{{{DZI_NAMESPACE}}}Image":
        raise NotAPyramid(f"unexpected root element {root.tag}")
    size = root.find(f"{{{DZI_NAMESPACE}}}Size")
    if size is None:
        raise NotAPyramid("descriptor has no Size element")
    try:
        return DziPyramid(
            image_width=int(size.get("Width")),
            image_height=int(size.get("Height")),
            tile_size=int(root.get("TileSize")),
            overlap=int(root.get("Overlap")),
            format=root.get("Format"),
        )
    except (TypeError, ValueError) as exc:
        raise NotAPyramid(f"bad descriptor attributes: {exc}") from exc


def _encode_tile(
    tile: np.ndarray, format: str, jpeg_quality: int, boost: bool
) -> bytes:
    buf = io.BytesIO()
    try:
        if format == "jpg":
            if boost:
                quality, subsampling = 100, 0
            else:
                quality, subsampling = jpeg_quality, SUBSAMPLING_420
            Image.fromarray(tile).save(
                buf, format="JPEG", quality=quality, subsampling=subsampling
            )
        else:
            Image.fromarray(tile).save(buf, format="PNG")
    except Exception as exc:
        raise EncodeError(str(exc)) from exc
    return buf.getvalue()


def build_pyramid(
    image: np.ndarray | SlideSource,
    out_dir: str | Path,
    name: str,
    tile_size: int = DEFAULT_TILE_SIZE,
    overlap: int = DEFAULT_OVERLAP,
    format: str = "jpg",
    jpeg_quality: int = DEFAULT_JPEG_QUALITY,
) -> DziPyramid:
    """Write ``{name}.dzi`` and ``{name}_files/{level}/{col}_{row}.*``.

    Accepts a raster or a slide (whole base level is read; intended for
    snapshot-sized inputs)."""
    if isinstance(image, SlideSource):
        image = image.read_region(
            Region(0, 0, image.base_width, image.base_height, image.objective_power)
        )
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("image must be (h, w, 3) uint8")
    h, w = image.shape[:2]
    pyramid = DziPyramid(w, h, tile_size, overlap, format)

    out_dir = Path(out_dir)
    files_dir = out_dir / f"{name}_files"
    try:
        if files_dir.exists():
            shutil.rmtree(files_dir)
        files_dir.mkdir(parents=True)
        current = image
        for level in range(pyramid.max_level, -1, -1):
            level_dir = files_dir / str(level)
            level_dir.mkdir()
            cols, rows = pyramid.level_tiles(level)
            boost = max(pyramid.level_dimensions(level)) <= LOSSLESS_BOOST_DIM
            for row in range(rows):
                for col in range(cols):
                    x0, y0, x1, y1 = pyramid.tile_bounds(level, col, row)
                    data = _encode_tile(
                        np.ascontiguousarray(current[y0:y1, x0:x1]),
                        format,
                        jpeg_quality,
                        boost,
                    )
                    (level_dir / f"{col}_{row}.{format}").write_bytes(data)
            if level > 0:
                current = kernels.downsample_2x2(current)
    except OSError as exc:
        raise IoError(f"cannot build pyramid under {out_dir}: {exc}") from exc
    write_descriptor(pyramid, out_dir / f"{name}.dzi")
    return pyramid


# ---------------------------------------------------------------------------
# validation


@dataclass
class PyramidReport:
    descriptor_ok: bool = True
    missing_tiles: list[str] = field(default_factory=list)
    extra_tiles: list[str] = field(default_factory=list)
    dimension_mismatches: list[str] = field(default_factory=list)
    downsample_violations: list[str] = field(default_factory=list)

    @property
    def violations(self) -> list[str]:
        out = [] if self.descriptor_ok else ["descriptor malformed"]
        out += [f"missing tile {t}" for t in self.missing_tiles]
        out += [f"extra tile {t}" for t in self.extra_tiles]
        out += [f"dimension mismatch {t}" for t in self.dimension_mismatches]
        out += [f"downsample inconsistency {t}" for t in self.downsample_violations]
        return out

    @property
    def ok(self) -> bool:
        return not self.violations


def _locate_descriptor(path: Path) -> Path:
    if path.is_file() and path.suffix == ".dzi":
        return path
    if path.is_dir():
        candidates = sorted(path.glob("*.dzi"))
        if len(candidates) == 1:
            return candidates[0]
        if not candidates:
            raise NotAPyramid(f"{path}: no .dzi descriptor found")
        raise NotAPyramid(
            f"{path}: multiple descriptors; validate one explicitly"
        )
    raise NotAPyramid(f"{path}: not a pyramid directory or descriptor")


def _assemble_level(
    pyramid: DziPyramid, files_dir: Path, level: int
) -> np.ndarray | None:
    """Rebuild a level raster from its tiles, cropping overlaps; None if
    any tile is missing or undecodable."""
    w, h = pyramid.level_dimensions(level)
    cols, rows = pyramid.level_tiles(level)
    out = np.empty((h, w, 3), dtype=np.uint8)
    ts = pyramid.tile_size
    for row in range(rows):
        for col in range(cols):
            tile_path = files_dir / str(level) / f"{col}_{row}.{pyramid.format}"
            try:
                with Image.open(tile_path) as img:
                    tile = np.asarray(img.convert("RGB"), dtype=np.uint8)
            except Exception:
                return None
            x0, y0, x1, y1 = pyramid.tile_bounds(level, col, row)
            if tile.shape[0] != y1 - y0 or tile.shape[1] != x1 - x0:
                return None
            # core region without the overlap borders
            cx0, cy0 = col * ts, row * ts
            cx1, cy1 = min(cx0 + ts, w), min(cy0 + ts, h)
            out[cy0:cy1, cx0:cx1] = tile[
                cy0 - y0 : cy1 - y0, cx0 - x0 : cx1 - x0
            ]
    return out


def validate_pyramid(path: str | Path, tolerance: float = 3.0) -> PyramidReport:
    """Check a published pyramid: descriptor, tile census, tile sizes,
    and that each level is the 2x2 downsample of the one below (mean
    absolute channel difference <= tolerance)."""
    dzi_path = _locate_descriptor(Path(path))
    files_dir = dzi_path.parent / f"{dzi_path.stem}_files"
    if not files_dir.is_dir():
        raise NotAPyramid(f"{files_dir}: missing _files tree")

    report = PyramidReport()
    try:
        pyramid = parse_descriptor(dzi_path.read_text(encoding="utf-8"))
    except NotAPyramid:
        report.descriptor_ok = False
        return report

    planned: set[str] = set()
    for level in range(pyramid.max_level + 1):
        cols, rows = pyramid.level_tiles(level)
        for row in range(rows):
            for col in range(cols):
                rel = f"{level}/{col}_{row}.{pyramid.format}"
                planned.add(rel)
                tile_path = files_dir / rel
                if not tile_path.is_file():
                    report.missing_tiles.append(f"{level}/{col}_{row}")
                    continue
                x0, y0, x1, y1 = pyramid.tile_bounds(level, col, row)
                try:
                    with Image.open(tile_path) as img:
                        size = img.size
                except Exception:
                    report.dimension_mismatches.append(
                        f"{level}/{col}_{row} (undecodable)"
                    )
                    continue
                if size != (x1 - x0, y1 - y0):
                    report.dimension_mismatches.append(
                        f"{level}/{col}_{row} is {size[0]}x{size[1]}, "
                        f"expected {x1 - x0}x{y1 - y0}"
                    )

    for entry in files_dir.rglob("*"):
        if entry.is_file():
            rel = entry.relative_to(files_dir).as_posix()
            if rel not in planned:
                report.extra_tiles.append(rel)
    report.extra_tiles.sort()

    finer = _assemble_level(pyramid, files_dir, pyramid.max_level)
    for level in range(pyramid.max_level, 0, -1):
        coarser = _assemble_level(pyramid, files_dir, level - 1)
        if finer is not None and coarser is not None:
            expected = kernels.downsample_2x2(finer)
            diff = np.abs(
                expected.astype(np.int16) - coarser.astype(np.int16)
            ).mean()
            if diff > tolerance:
                report.downsample_violations.append(
                    f"level {level - 1}: mean abs diff {diff:.2f} > {tolerance}"
                )
        finer = coarser
    return report

"""Reader/writer for the ``.wtif`` tiled pyramid container.

The container is a little-endian classic TIFF restricted to one tiled
RGB IFD per pyramid level, finest level first. Accepted tags:

    256 ImageWidth, 257 ImageLength, 258 BitsPerSample (8,8,8),
    259 Compression (1 = none, 7 = JPEG), 262 Photometric (2 = RGB),
    322 TileWidth, 323 TileLength, 324 TileOffsets, 325 TileByteCounts

Edge tiles are stored padded to the full tile size; readers crop the
padding. Uncompressed tile payloads are raw row-major RGB. Everything
else (other compressions, bit depths, photometrics) is rejected with a
typed error. Unknown extra tags are ignored, like any classic reader.

Magnification metadata lives in a ``{stem}.meta`` sidecar (key=value,
``#`` comments) because classic TIFF has no magnification tag.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import (
    DecodeError,
    EncodeError,
    MalformedContainer,
    MissingFile,
    UnsupportedFeature,
)

TAG_IMAGE_WIDTH = 256
TAG_IMAGE_LENGTH = 257
TAG_BITS_PER_SAMPLE = 258
TAG_COMPRESSION = 259
TAG_PHOTOMETRIC = 262
TAG_TILE_WIDTH = 322
TAG_TILE_LENGTH = 323
TAG_TILE_OFFSETS = 324
TAG_TILE_BYTE_COUNTS = 325

_REQUIRED_TAGS = (
    TAG_IMAGE_WIDTH,
    TAG_IMAGE_LENGTH,
    TAG_BITS_PER_SAMPLE,
    TAG_COMPRESSION,
    TAG_PHOTOMETRIC,
    TAG_TILE_WIDTH,
    TAG_TILE_LENGTH,
    TAG_TILE_OFFSETS,
    TAG_TILE_BYTE_COUNTS,
)

_TYPE_SHORT = 3
_TYPE_LONG = 4

COMPRESSION_NONE = 1
COMPRESSION_JPEG = 7

_MAX_LEVELS = 64
_MAX_DIM = 1 << 30


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass
class WtifLevel:
    width: int
    height: int
    tile_width: int
    tile_height: int
    compression: int
    tile_offsets: tuple[int, ...]
    tile_byte_counts: tuple[int, ...]

    @property
    def tiles_across(self) -> int:
        return _ceil_div(self.width, self.tile_width)

    @property
    def tiles_down(self) -> int:
        return _ceil_div(self.height, self.tile_height)


class WtifFile:
    """Parsed container with positional (thread-safe) tile reads."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        if not self.path.is_file():
            raise MissingFile(str(self.path))
        self._fd = os.open(self.path, os.O_RDONLY)
        try:
            self._size = os.fstat(self._fd).st_size
            self.levels = self._parse()
        except BaseException:
            os.close(self._fd)
            self._fd = -1
            raise

    # -- raw access --

    def _read(self, offset: int, count: int) -> bytes:
        if offset < 0 or count < 0 or offset + count > self._size:
            raise MalformedContainer(
                f"{self.path.name}: read of {count} bytes at {offset} "
                f"exceeds file size {self._size}"
            )
        data = os.pread(self._fd, count, offset)
        if len(data) != count:
            raise MalformedContainer(f"{self.path.name}: short read")
        return data

    def close(self) -> None:
        if self._fd >= 0:
            os.close(self._fd)
            self._fd = -1

    def __enter__(self) -> "WtifFile":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self):  # pragma: no cover - GC safety net
        try:
            self.close()
        except Exception:
            pass

    # -- structure --

    def _parse(self) -> list[WtifLevel]:
        header = self._read(0, 8)
        if header[:2] != b"II":
            raise MalformedContainer(f"{self.path.name}: not little-endian TIFF")
        magic, ifd_offset = struct.unpack_from("<HI", header, 2)
        if magic != 42:
            raise MalformedContainer(f"{self.path.name}: bad magic {magic}")

        levels: list[WtifLevel] = []
        seen: set[int] = set()
        while ifd_offset != 0:
            if ifd_offset % 2:
                raise MalformedContainer(
                    f"{self.path.name}: unaligned IFD offset {ifd_offset}"
                )
            if ifd_offset in seen:
                raise MalformedContainer(f"{self.path.name}: IFD cycle")
            seen.add(ifd_offset)
            if len(seen) > _MAX_LEVELS:
                raise MalformedContainer(f"{self.path.name}: too many IFDs")
            level, ifd_offset = self._parse_ifd(ifd_offset)
            levels.append(level)

        if not levels:
            raise MalformedContainer(f"{self.path.name}: no IFDs")
        self._check_pyramid(levels)
        self._check_tile_ranges(levels)
        return levels

    def _parse_ifd(self, offset: int) -> tuple[WtifLevel, int]:
        (count,) = struct.unpack("<H", self._read(offset, 2))
        if count == 0:
            raise MalformedContainer(f"{self.path.name}: empty IFD")
        raw = self._read(offset + 2, count * 12)
        (next_off,) = struct.unpack("<I", self._read(offset + 2 + count * 12, 4))

        values: dict[int, tuple[int, ...]] = {}
        prev_tag = -1
        for i in range(count):
            tag, typ, n = struct.unpack_from("<HHI", raw, i * 12)
            if tag <= prev_tag:
                raise MalformedContainer(
                    f"{self.path.name}: IFD tags out of order at tag {tag}"
                )
            prev_tag = tag
            if tag not in _REQUIRED_TAGS:
                continue  # foreign tags are ignored
            values[tag] = self._entry_values(tag, typ, n, raw, i * 12 + 8)

        for tag in _REQUIRED_TAGS:
            if tag not in values:
                raise MalformedContainer(
                    f"{self.path.name}: missing required tag {tag}"
                )

        width = self._scalar(values, TAG_IMAGE_WIDTH)
        height = self._scalar(values, TAG_IMAGE_LENGTH)
        if not (1 <= width <= _MAX_DIM and 1 <= height <= _MAX_DIM):
            raise MalformedContainer(
                f"{self.path.name}: bad image dimensions {width}x{height}"
            )
        bits = values[TAG_BITS_PER_SAMPLE]
        if len(bits) != 3:
            raise UnsupportedFeature(
                f"{self.path.name}: expected 3 samples/pixel, got {len(bits)}"
            )
        if any(b != 8 for b in bits):
            raise UnsupportedFeature(
                f"{self.path.name}: bits per sample {bits}, only 8 supported"
            )
        compression = self._scalar(values, TAG_COMPRESSION)
        if compression not in (COMPRESSION_NONE, COMPRESSION_JPEG):
            raise UnsupportedFeature(
                f"{self.path.name}: compression {compression} not supported"
            )
        photometric = self._scalar(values, TAG_PHOTOMETRIC)
        if photometric != 2:
            raise UnsupportedFeature(
                f"{self.path.name}: photometric {photometric}, only RGB supported"
            )
        tile_w = self._scalar(values, TAG_TILE_WIDTH)
        tile_h = self._scalar(values, TAG_TILE_LENGTH)
        if tile_w < 16 or tile_h < 16 or tile_w > 65536 or tile_h > 65536:
            raise MalformedContainer(
                f"{self.path.name}: tile size {tile_w}x{tile_h} out of range"
            )

        level = WtifLevel(
            width=width,
            height=height,
            tile_width=tile_w,
            tile_height=tile_h,
            compression=compression,
            tile_offsets=values[TAG_TILE_OFFSETS],
            tile_byte_counts=values[TAG_TILE_BYTE_COUNTS],
        )
        n_tiles = level.tiles_across * level.tiles_down
        if len(level.tile_offsets) != n_tiles or len(level.tile_byte_counts) != n_tiles:
            raise MalformedContainer(
                f"{self.path.name}: expected {n_tiles} tiles, offsets/counts "
                f"have {len(level.tile_offsets)}/{len(level.tile_byte_counts)}"
            )
        return level, next_off

    def _entry_values(
        self, tag: int, typ: int, n: int, raw: bytes, value_pos: int
    ) -> tuple[int, ...]:
        if typ == _TYPE_SHORT:
            item, size = "H", 2
        elif typ == _TYPE_LONG:
            item, size = "I", 4
        else:
            raise MalformedContainer(
                f"{self.path.name}: tag {tag} has unsupported type {typ}"
            )
        if n == 0 or n > 1 << 24:
            raise MalformedContainer(f"{self.path.name}: tag {tag} count {n}")
        total = n * size
        if total <= 4:
            buf = raw[value_pos : value_pos + total]
        else:
            (array_off,) = struct.unpack_from("<I", raw, value_pos)
            buf = self._read(array_off, total)
        return struct.unpack(f"<{n}{item}", buf)

    def _scalar(self, values: dict[int, tuple[int, ...]], tag: int) -> int:
        vals = values[tag]
        if len(vals) != 1:
            raise MalformedContainer(
                f"{self.path.name}: tag {tag} expected 1 value, got {len(vals)}"
            )
        return vals[0]

    def _check_pyramid(self, levels: list[WtifLevel]) -> None:
        for i in range(1, len(levels)):
            prev, cur = levels[i - 1], levels[i]
            if cur.width > _ceil_div(prev.width, 2) or cur.height > _ceil_div(
                prev.height, 2
            ):
                raise MalformedContainer(
                    f"{self.path.name}: level {i} ({cur.width}x{cur.height}) is "
                    f"not at most half of level {i - 1} "
                    f"({prev.width}x{prev.height})"
                )

    def _check_tile_ranges(self, levels: list[WtifLevel]) -> None:
        ranges = []
        for li, level in enumerate(levels):
            expected = (
                level.tile_width * level.tile_height * 3
                if level.compression == COMPRESSION_NONE
                else None
            )
            for off, cnt in zip(level.tile_offsets, level.tile_byte_counts):
                if cnt == 0:
                    raise MalformedContainer(
                        f"{self.path.name}: level {li} has an empty tile"
                    )
                if expected is not None and cnt != expected:
                    raise MalformedContainer(
                        f"{self.path.name}: level {li} uncompressed tile has "
                        f"{cnt} bytes, expected {expected}"
                    )
                if off + cnt > self._size:
                    raise MalformedContainer(
                        f"{self.path.name}: tile data [{off}, {off + cnt}) "
                        f"beyond end of file"
                    )
                ranges.append((off, off + cnt))
        ranges.sort()
        for (s0, e0), (s1, _) in zip(ranges, ranges[1:]):
            if s1 < e0:
                raise MalformedContainer(
                    f"{self.path.name}: overlapping tile extents at {s1}"
                )

    # -- pixels --

    def read_tile(self, level_index: int, tile_index: int) -> np.ndarray:
        """Decode one stored tile, padded to the full tile size."""
        level = self.levels[level_index]
        off = level.tile_offsets[tile_index]
        cnt = level.tile_byte_counts[tile_index]
        data = self._read(off, cnt)
        th, tw = level.tile_height, level.tile_width
        if level.compression == COMPRESSION_NONE:
            return np.frombuffer(data, dtype=np.uint8).reshape(th, tw, 3).copy()
        try:
            with Image.open(io.BytesIO(data)) as img:
                img.load()
                if img.size != (tw, th):
                    raise DecodeError(
                        f"{self.path.name}: tile {tile_index} decoded to "
                        f"{img.size}, expected {(tw, th)}"
                    )
                return np.asarray(img.convert("RGB"), dtype=np.uint8)
        except DecodeError:
            raise
        except Exception as exc:
            raise DecodeError(
                f"{self.path.name}: tile {tile_index} of level {level_index}: {exc}"
            ) from exc


# ---------------------------------------------------------------------------
# writer


def _encode_tile(tile: np.ndarray, compression: int, jpeg_quality: int) -> bytes:
    if compression == COMPRESSION_NONE:
        return tile.tobytes()
    buf = io.BytesIO()
    try:
        Image.fromarray(tile).save(
            buf, format="JPEG", quality=jpeg_quality, subsampling=2
        )
    except Exception as exc:  # pragma: no cover
        raise EncodeError(str(exc)) from exc
    return buf.getvalue()


def write_wtif(
    path: str | os.PathLike,
    levels: Sequence[np.ndarray],
    tile_size: int = 256,
    compression: str = "none",
    jpeg_quality: int = 90,
) -> None:
    """Write a pyramid (finest level first) as a ``.wtif`` container."""
    if not levels:
        raise ValueError("at least one level required")
    comp = {"none": COMPRESSION_NONE, "jpeg": COMPRESSION_JPEG}.get(compression)
    if comp is None:
        raise ValueError(f"unknown compression {compression!r}")
    if tile_size < 16:
        raise ValueError("tile size must be >= 16")
    for i, lv in enumerate(levels):
        if lv.ndim != 3 or lv.shape[2] != 3 or lv.dtype != np.uint8:
            raise ValueError(f"level {i} must be (h, w, 3) uint8")

    out = io.BytesIO()
    out.write(struct.pack("<2sHI", b"II", 42, 0))  # IFD offset patched below

    def pad_even() -> None:
        if out.tell() % 2:
            out.write(b"\x00")

    ifd_pointer_pos = 4
    for raster in levels:
        h, w = raster.shape[:2]
        across = _ceil_div(w, tile_size)
        down = _ceil_div(h, tile_size)
        offsets: list[int] = []
        counts: list[int] = []
        for ty in range(down):
            for tx in range(across):
                tile = np.zeros((tile_size, tile_size, 3), dtype=np.uint8)
                block = raster[
                    ty * tile_size : (ty + 1) * tile_size,
                    tx * tile_size : (tx + 1) * tile_size,
                ]
                tile[: block.shape[0], : block.shape[1]] = block
                data = _encode_tile(tile, comp, jpeg_quality)
                pad_even()
                offsets.append(out.tell())
                counts.append(len(data))
                out.write(data)

        def write_array(values: list[int], fmt: str) -> int:
            pad_even()
            pos = out.tell()
            out.write(struct.pack(f"<{len(values)}{fmt}", *values))
            return pos

        bits_off = write_array([8, 8, 8], "H")
        n = len(offsets)
        offsets_field = offsets[0] if n == 1 else write_array(offsets, "I")
        counts_field = counts[0] if n == 1 else write_array(counts, "I")

        entries = [
            (TAG_IMAGE_WIDTH, _TYPE_LONG, 1, w),
            (TAG_IMAGE_LENGTH, _TYPE_LONG, 1, h),
            (TAG_BITS_PER_SAMPLE, _TYPE_SHORT, 3, bits_off),
            (TAG_COMPRESSION, _TYPE_SHORT, 1, comp),
            (TAG_PHOTOMETRIC, _TYPE_SHORT, 1, 2),
            (TAG_TILE_WIDTH, _TYPE_LONG, 1, tile_size),
            (TAG_TILE_LENGTH, _TYPE_LONG, 1, tile_size),
            (TAG_TILE_OFFSETS, _TYPE_LONG, n, offsets_field),
            (TAG_TILE_BYTE_COUNTS, _TYPE_LONG, n, counts_field),
        ]
        pad_even()
        ifd_pos = out.tell()
        # patch the previous IFD chain pointer
        end = out.tell()
        out.seek(ifd_pointer_pos)
        out.write(struct.pack("<I", ifd_pos))
        out.seek(end)

        out.write(struct.pack("<H", len(entries)))
        for tag, typ, cnt, value in entries:
            if typ == _TYPE_SHORT and cnt == 1:
                out.write(struct.pack("<HHIHH", tag, typ, cnt, value, 0))
            else:
                out.write(struct.pack("<HHII", tag, typ, cnt, value))
        ifd_pointer_pos = out.tell()
        out.write(struct.pack("<I", 0))

    Path(path).write_bytes(out.getvalue())


# ---------------------------------------------------------------------------
# metadata sidecar


def meta_path_for(slide_path: str | os.PathLike) -> Path:
    return Path(slide_path).with_suffix(".meta")


def parse_meta(path: str | os.PathLike) -> dict[str, float]:
    """Parse the key=value sidecar; keys are case-sensitive."""
    known = ("objective_power", "mpp_x", "mpp_y")
    result: dict[str, float] = {}
    text = Path(path).read_text(encoding="ascii")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise MalformedContainer(f"{path}: line {lineno}: expected key=value")
        key = key.strip()
        if key not in known:
            continue
        try:
            result[key] = float(value.strip())
        except ValueError as exc:
            raise MalformedContainer(
                f"{path}: line {lineno}: bad value for {key}"
            ) from exc
    for key, value in result.items():
        if value <= 0:
            raise MalformedContainer(f"{path}: {key} must be positive")
    return result


def write_meta(
    path: str | os.PathLike,
    objective_power: float,
    mpp_x: float | None = None,
    mpp_y: float | None = None,
) -> None:
    lines = [f"objective_power={objective_power}"]
    if mpp_x is not None:
        lines.append(f"mpp_x={mpp_x}")
    if mpp_y is not None:
        lines.append(f"mpp_y={mpp_y}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")

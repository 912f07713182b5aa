"""Slide handles: pyramid metadata, magnification math and region reads.

A region read resolves to the finest stored level whose downsample does
not exceed the requested one, then box-downsamples to the requested
magnification. Power-of-two factors are applied as repeated exact 2x2
averaging (so levels missing from the file behave as if synthesized);
anything fractional goes through the summed-area resampler. Reads at a
stored level's own geometry are returned verbatim, which is what makes
tile mosaics stitch back pixel-exactly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from . import kernels, wtif
from .errors import (
    MagnificationOutOfRange,
    MissingFile,
    RegionOutOfBounds,
    UnsupportedFeature,
)
from .resample import resize_box

DEFAULT_OBJECTIVE_POWER = 40.0


@dataclass(frozen=True)
class StoredLevel:
    index: int
    width: int
    height: int
    tile_width: int
    tile_height: int
    downsample: float


@dataclass(frozen=True)
class Region:
    """Pixel rectangle addressed at a given magnification."""

    x: int
    y: int
    width: int
    height: int
    magnification: float | None = None


class _Backend(Protocol):
    def read_level_rect(
        self, level: int, x: int, y: int, w: int, h: int
    ) -> np.ndarray: ...

    def close(self) -> None: ...


class _WtifBackend:
    def __init__(self, container: wtif.WtifFile):
        self._file = container

    def read_level_rect(self, level: int, x: int, y: int, w: int, h: int) -> np.ndarray:
        lv = self._file.levels[level]
        out = np.empty((h, w, 3), dtype=np.uint8)
        tw, th = lv.tile_width, lv.tile_height
        for ty in range(y // th, (y + h - 1) // th + 1):
            for tx in range(x // tw, (x + w - 1) // tw + 1):
                tile = self._file.read_tile(level, ty * lv.tiles_across + tx)
                # clip to level extent (container pads edge tiles)
                vx0, vy0 = tx * tw, ty * th
                vx1 = min(vx0 + tw, lv.width)
                vy1 = min(vy0 + th, lv.height)
                ix0, iy0 = max(vx0, x), max(vy0, y)
                ix1, iy1 = min(vx1, x + w), min(vy1, y + h)
                if ix0 >= ix1 or iy0 >= iy1:
                    continue
                out[iy0 - y : iy1 - y, ix0 - x : ix1 - x] = tile[
                    iy0 - vy0 : iy1 - vy0, ix0 - vx0 : ix1 - vx0
                ]
        return out

    def close(self) -> None:
        self._file.close()


class ArrayBackend:
    """Single-level backend over an in-memory raster (synthetic slides)."""

    def __init__(self, raster: np.ndarray):
        self._raster = raster

    def read_level_rect(self, level: int, x: int, y: int, w: int, h: int) -> np.ndarray:
        assert level == 0
        return np.ascontiguousarray(self._raster[y : y + h, x : x + w])

    def close(self) -> None:
        pass


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


class SlideSource:
    """Open handle to a pyramidal slide. Safe for concurrent reads."""

    def __init__(
        self,
        path: Path,
        backend: _Backend,
        levels: list[StoredLevel],
        objective_power: float,
        mpp_x: float | None,
        mpp_y: float | None,
        warnings: Iterable[str] = (),
    ):
        self.path = path
        self._backend = backend
        self.levels = levels
        self.base_width = levels[0].width
        self.base_height = levels[0].height
        self.objective_power = objective_power
        self.mpp_x = mpp_x
        self.mpp_y = mpp_y
        self.warnings = list(warnings)
        # stored levels that sit exactly on the ceil-halving ladder can
        # serve as sources for further power-of-two downsampling
        self._pow2_levels: dict[int, int] = {}
        for lv in levels:
            for k in range(_level_count_upper_bound(self.base_width, self.base_height)):
                if (
                    _ceil_frac(self.base_width, 1 << k) == lv.width
                    and _ceil_frac(self.base_height, 1 << k) == lv.height
                ):
                    self._pow2_levels.setdefault(k, lv.index)
                    break

    # -- lifecycle --

    def close(self) -> None:
        self._backend.close()

    def __enter__(self) -> "SlideSource":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- geometry --

    def _check_magnification(self, magnification: float | None) -> None:
        if magnification is None or not (0 < magnification <= self.objective_power):
            raise MagnificationOutOfRange(
                f"magnification {magnification} outside (0, {self.objective_power}]"
            )

    def dimensions_at(self, magnification: float) -> tuple[int, int]:
        """Level dimensions at a magnification: ceil(base * m / power)."""
        self._check_magnification(magnification)
        scale = Fraction(magnification) / Fraction(self.objective_power)
        return (
            math.ceil(self.base_width * scale),
            math.ceil(self.base_height * scale),
        )

    # -- pixels --

    def read_region(self, region: Region) -> np.ndarray:
        """Read a region as an (h, w, 3) uint8 raster."""
        m = region.magnification
        self._check_magnification(m)
        lw, lh = self.dimensions_at(m)
        x, y, w, h = region.x, region.y, region.width, region.height
        if w < 1 or h < 1 or x < 0 or y < 0 or x + w > lw or y + h > lh:
            raise RegionOutOfBounds(
                f"region {x},{y} {w}x{h} outside {lw}x{lh} at {m}x"
            )

        # native geometry: requested grid is exactly a stored level's
        for lv in self.levels:
            if (lv.width, lv.height) == (lw, lh):
                return self._backend.read_level_rect(lv.index, x, y, w, h)

        downsample = Fraction(self.objective_power) / Fraction(m)
        if _is_pow2(downsample.numerator) and _is_pow2(downsample.denominator):
            k = downsample.numerator.bit_length() - downsample.denominator.bit_length()
            return self._read_pow2(x, y, w, h, k)
        return self._read_fractional(x, y, w, h, downsample)

    def _best_pow2_source(self, k: int) -> tuple[int, int]:
        """Deepest halving-ladder level j <= k, and its stored index."""
        j = max(j for j in self._pow2_levels if j <= k)
        return j, self._pow2_levels[j]

    def _read_pow2(self, x: int, y: int, w: int, h: int, k: int) -> np.ndarray:
        j, level_index = self._best_pow2_source(k)
        r = k - j
        lv = self.levels[level_index]
        sx = x << r
        sy = y << r
        sw = min((x + w) << r, lv.width) - sx
        sh = min((y + h) << r, lv.height) - sy
        block = self._backend.read_level_rect(level_index, sx, sy, sw, sh)
        for _ in range(r):
            block = kernels.downsample_2x2(block)
        return block

    def _read_fractional(
        self, x: int, y: int, w: int, h: int, downsample: Fraction
    ) -> np.ndarray:
        # requested grid has a ragged last pixel: clamp to base extent
        k = max(j for j in self._pow2_levels if (1 << j) <= downsample)
        level_index = self._pow2_levels[k]
        lv = self.levels[level_index]
        scale = downsample / (1 << k)
        x0 = x * scale
        y0 = y * scale
        x1 = min((x + w) * scale, Fraction(lv.width))
        y1 = min((y + h) * scale, Fraction(lv.height))
        fx0, fy0 = math.floor(x0), math.floor(y0)
        fx1, fy1 = math.ceil(x1), math.ceil(y1)
        block = self._backend.read_level_rect(
            level_index, fx0, fy0, fx1 - fx0, fy1 - fy0
        )
        rect = (float(x0 - fx0), float(y0 - fy0), float(x1 - fx0), float(y1 - fy0))
        return resize_box(block, w, h, rect)


def _ceil_frac(n: int, d: int) -> int:
    return -(-n // d)


def _level_count_upper_bound(w: int, h: int) -> int:
    return max(w, h).bit_length() + 1


def _levels_from_wtif(container: wtif.WtifFile) -> list[StoredLevel]:
    base = container.levels[0]
    out = []
    for i, lv in enumerate(container.levels):
        out.append(
            StoredLevel(
                index=i,
                width=lv.width,
                height=lv.height,
                tile_width=lv.tile_width,
                tile_height=lv.tile_height,
                downsample=base.width / lv.width,
            )
        )
    return out


def open_slide(path: str | os.PathLike) -> SlideSource:
    """Open a ``.wtif`` container or a ``.synth`` synthetic slide spec."""
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix == ".synth":
        from .synthetic import open_synth

        return open_synth(p)
    if suffix != ".wtif":
        raise UnsupportedFeature(f"unrecognized slide extension {p.suffix!r}")
    if not p.is_file():
        raise MissingFile(str(p))

    container = wtif.WtifFile(p)
    try:
        warnings: list[str] = []
        meta_file = wtif.meta_path_for(p)
        meta = wtif.parse_meta(meta_file) if meta_file.is_file() else {}
        if "objective_power" not in meta:
            warnings.append(
                f"no objective_power in {meta_file.name}; defaulting to "
                f"{DEFAULT_OBJECTIVE_POWER}"
            )
        return SlideSource(
            path=p,
            backend=_WtifBackend(container),
            levels=_levels_from_wtif(container),
            objective_power=meta.get("objective_power", DEFAULT_OBJECTIVE_POWER),
            mpp_x=meta.get("mpp_x"),
            mpp_y=meta.get("mpp_y"),
            warnings=warnings,
        )
    except BaseException:
        container.close()
        raise


def read_region(src: SlideSource, region: Region) -> np.ndarray:
    return src.read_region(region)


def dimensions_at(src: SlideSource, magnification: float) -> tuple[int, int]:
    return src.dimensions_at(magnification)

"""Deterministic synthetic slides for fixtures and pipeline testing.

Patterns cover the two imaging regimes the empty-tile filters target:
bright "fluorescent" spots on black, and tissue-like textured blobs on
a white brightfield background, plus solid fields and checkerboards for
exact-value tests. A spec can be materialized as a ``.wtif`` pyramid or
opened directly from a ``.synth`` JSON file (rendered in memory).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import kernels, wtif
from .errors import MalformedContainer, MissingFile
from .slide import ArrayBackend, SlideSource, StoredLevel, open_slide

SPOT_RGB = (0.35, 1.0, 0.45)

_TISSUE_PALETTE = (
    (186, 118, 170),
    (150, 86, 148),
    (205, 155, 192),
    (170, 100, 140),
    (140, 74, 120),
)

PATTERNS = ("solid", "checker", "spots", "blobs")


@dataclass
class SyntheticSpec:
    pattern: str
    width: int
    height: int
    objective_power: float = 40.0
    mpp_x: float = 0.25
    mpp_y: float = 0.25
    seed: int = 0
    # solid
    color: tuple[int, int, int] = (255, 255, 255)
    # checker
    colors: tuple[tuple[int, int, int], tuple[int, int, int]] = (
        (255, 255, 255),
        (0, 0, 0),
    )
    cell: int = 64
    # spots
    spot_count: int = 50
    spot_sigma: tuple[float, float] = (2.0, 6.0)
    spot_peak: tuple[int, int] = (140, 255)
    # blobs
    blob_count: int = 12
    blob_axes: tuple[int, int] = (40, 160)
    texture: int = 10  # fine-grain amplitude on top of the octave field
    # container parameters
    levels: int | None = None
    tile_size: int = 256
    compression: str = "none"
    jpeg_quality: int = 90

    def validate(self) -> None:
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad dimensions {self.width}x{self.height}")
        if self.objective_power <= 0:
            raise ValueError("objective_power must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedContainer(f"bad synthetic spec: {exc}") from exc
        if not isinstance(data, dict):
            raise MalformedContainer("synthetic spec must be a JSON object")
        fields = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - fields
        if unknown:
            raise MalformedContainer(f"unknown spec keys: {sorted(unknown)}")
        if "pattern" not in data or "width" not in data or "height" not in data:
            raise MalformedContainer("spec needs pattern, width and height")
        spec = cls(**{k: _json_value(k, v) for k, v in data.items()})
        try:
            spec.validate()
        except ValueError as exc:
            raise MalformedContainer(str(exc)) from exc
        return spec


def _json_value(key, value):
    if isinstance(value, list):
        return tuple(_json_value(key, v) for v in value)
    return value


# ---------------------------------------------------------------------------
# rendering


def render(spec: SyntheticSpec) -> np.ndarray:
    raster, _ = render_with_truth(spec)
    return raster


def render_with_truth(spec: SyntheticSpec) -> tuple[np.ndarray, dict]:
    """Render the base raster plus the generator's own ground truth."""
    spec.validate()
    h, w = spec.height, spec.width
    rng = np.random.default_rng(spec.seed)
    truth: dict = {"pattern": spec.pattern}

    if spec.pattern == "solid":
        raster = np.empty((h, w, 3), dtype=np.uint8)
        raster[:] = spec.color
        truth["color"] = tuple(spec.color)
    elif spec.pattern == "checker":
        ys = (np.arange(h) // spec.cell)[:, None]
        xs = (np.arange(w) // spec.cell)[None, :]
        parity = ((ys + xs) % 2).astype(np.uint8)
        palette = np.array(spec.colors, dtype=np.uint8)
        raster = palette[parity]
    elif spec.pattern == "spots":
        raster, spots = _render_spots(spec, rng)
        truth["spots"] = spots
        truth["bright_count_gt60"] = int(
            np.count_nonzero(kernels.luminance(raster) > 60)
        )
    elif spec.pattern == "blobs":
        raster, coverage = _render_blobs(spec, rng)
        truth["coverage"] = coverage
    else:  # pragma: no cover - validate() rejects earlier
        raise ValueError(spec.pattern)
    return raster, truth


def _render_spots(spec: SyntheticSpec, rng) -> tuple[np.ndarray, list]:
    h, w = spec.height, spec.width
    intensity = np.zeros((h, w), dtype=np.float64)
    spots = []
    for _ in range(spec.spot_count):
        cx = rng.uniform(0, w)
        cy = rng.uniform(0, h)
        sigma = rng.uniform(*spec.spot_sigma)
        peak = rng.uniform(*spec.spot_peak)
        spots.append((cx, cy, sigma, peak))
        r = int(math.ceil(4 * sigma))
        x0, x1 = max(0, int(cx) - r), min(w, int(cx) + r + 1)
        y0, y1 = max(0, int(cy) - r), min(h, int(cy) + r + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        ys = np.arange(y0, y1)[:, None] + 0.5 - cy
        xs = np.arange(x0, x1)[None, :] + 0.5 - cx
        g = peak * np.exp(-(ys * ys + xs * xs) / (2 * sigma * sigma))
        patch = intensity[y0:y1, x0:x1]
        np.maximum(patch, g, out=patch)
    raster = np.clip(
        np.floor(intensity[:, :, None] * np.asarray(SPOT_RGB) + 0.5), 0, 255
    ).astype(np.uint8)
    return raster, spots


# stain-variation octaves: (grain px, amplitude); self-similar so that
# downsampled levels keep the same smooth character the base has
_TEXTURE_OCTAVES = ((64, 26), (32, 13), (16, 7), (8, 4))


def _octave_field(w: int, h: int, fine_amplitude: int, rng) -> np.ndarray:
    from PIL import Image

    total = np.zeros((h, w, 3), dtype=np.float64)
    for grain, amplitude in _TEXTURE_OCTAVES:
        gw, gh = w // grain + 2, h // grain + 2
        coarse = rng.uniform(-amplitude, amplitude, (gh, gw, 3))
        up = np.asarray(
            Image.fromarray(
                np.clip(coarse + 128, 0, 255).astype(np.uint8)
            ).resize((w, h), Image.BILINEAR),
            dtype=np.float64,
        )
        total += up - 128.0
    if fine_amplitude:
        total += rng.uniform(-fine_amplitude, fine_amplitude, (h, w, 3))
    return total


def _render_blobs(spec: SyntheticSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    h, w = spec.height, spec.width
    texture = _octave_field(w, h, spec.texture, rng)
    raster = np.full((h, w, 3), 255, dtype=np.uint8)
    coverage = np.zeros((h, w), dtype=bool)
    for _ in range(spec.blob_count):
        cx = rng.uniform(0, w)
        cy = rng.uniform(0, h)
        a = rng.uniform(*spec.blob_axes)
        b = rng.uniform(*spec.blob_axes)
        theta = rng.uniform(0, math.pi)
        color = np.asarray(_TISSUE_PALETTE[rng.integers(len(_TISSUE_PALETTE))])
        r = int(math.ceil(max(a, b)))
        x0, x1 = max(0, int(cx) - r), min(w, int(cx) + r + 1)
        y0, y1 = max(0, int(cy) - r), min(h, int(cy) + r + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        ys = np.arange(y0, y1)[:, None] + 0.5 - cy
        xs = np.arange(x0, x1)[None, :] + 0.5 - cx
        u = (xs * math.cos(theta) + ys * math.sin(theta)) / a
        v = (-xs * math.sin(theta) + ys * math.cos(theta)) / b
        mask = u * u + v * v <= 1.0
        patch = raster[y0:y1, x0:x1]
        shaded = np.clip(
            color[None, None, :] + texture[y0:y1, x0:x1], 0, 255
        ).astype(np.uint8)
        patch[mask] = shaded[mask]
        coverage[y0:y1, x0:x1] |= mask
    return raster, coverage


# ---------------------------------------------------------------------------
# materialization


def _auto_level_count(w: int, h: int, tile_size: int) -> int:
    n = 1
    while max(w, h) > tile_size:
        w, h = -(-w // 2), -(-h // 2)
        n += 1
    return n


def build_levels(base: np.ndarray, count: int) -> list[np.ndarray]:
    """Base raster plus ``count - 1`` successive exact 2x2 halvings."""
    levels = [base]
    for _ in range(count - 1):
        levels.append(kernels.downsample_2x2(levels[-1]))
    return levels


def generate_synthetic(spec: SyntheticSpec, out: str | os.PathLike) -> SlideSource:
    """Render a spec and write it as ``.wtif`` + ``.meta``; returns the
    reopened slide."""
    spec.validate()  # raises before anything is written
    out = Path(out)
    raster = render(spec)
    count = spec.levels or _auto_level_count(
        spec.width, spec.height, spec.tile_size
    )
    levels = build_levels(raster, count)
    wtif.write_wtif(
        out,
        levels,
        tile_size=spec.tile_size,
        compression=spec.compression,
        jpeg_quality=spec.jpeg_quality,
    )
    wtif.write_meta(
        wtif.meta_path_for(out), spec.objective_power, spec.mpp_x, spec.mpp_y
    )
    return open_slide(out)


def open_synth(path: str | os.PathLike) -> SlideSource:
    """Open a ``.synth`` JSON spec as an in-memory slide."""
    p = Path(path)
    if not p.is_file():
        raise MissingFile(str(p))
    spec = SyntheticSpec.from_json(p.read_text(encoding="utf-8"))
    raster = render(spec)
    level = StoredLevel(
        index=0,
        width=spec.width,
        height=spec.height,
        tile_width=min(spec.width, 256),
        tile_height=min(spec.height, 256),
        downsample=1.0,
    )
    return SlideSource(
        path=p,
        backend=ArrayBackend(raster),
        levels=[level],
        objective_power=spec.objective_power,
        mpp_x=spec.mpp_x,
        mpp_y=spec.mpp_y,
    )

"""Web snapshots: a centered region covering a fraction of the slide
area (default one quarter), optionally watermarked, encoded as JPEG.

The center rule maximizes the chance that the diagnostically relevant
region lands in the snapshot; when it sits far off-center it can be
missed, which is why a manually taken snapshot can be staged to replace
the automatic one on the next pipeline run (review_override).
"""

from __future__ import annotations

import math
import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidImage, IoError, LogoTooLarge, UnknownNamePattern
from .jpegcodec import encode_jpeg, load_image_rgba
from .slide import Region, SlideSource

TARGET_SNAPSHOT_PIXELS = 45_000_000

WATERMARK_HEIGHT_FRACTION = 0.08
WATERMARK_MARGIN_FRACTION = 0.02


@dataclass
class SnapshotConfig:
    magnification: float | None = None  # None: pick via TARGET_SNAPSHOT_PIXELS
    jpeg_quality: int = 85
    watermark_path: Path | None = None
    fraction: float = 0.25


@dataclass
class SnapshotResult:
    region: Region
    jpeg_path: Path
    width: int
    height: int


def _round_half_up(v: float) -> int:
    return math.floor(v + 0.5)


def compute_center_region(
    slide_dims: tuple[int, int],
    fraction: float,
    magnification: float | None = None,
) -> Region:
    """Centered rectangle covering ``fraction`` of the slide area, each
    axis scaled by sqrt(fraction) to preserve aspect."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction {fraction} outside (0, 1]")
    full_w, full_h = slide_dims
    scale = math.sqrt(fraction)
    width = max(1, _round_half_up(full_w * scale))
    height = max(1, _round_half_up(full_h * scale))
    x = (full_w - width) // 2
    y = (full_h - height) // 2
    return Region(x, y, width, height, magnification)


def default_snapshot_magnification(src: SlideSource, fraction: float) -> float:
    """Smallest magnification whose snapshot reaches the publishing
    resolution target, or the objective power when the slide is too
    small to get there."""
    full_area = src.base_width * src.base_height * fraction
    if full_area <= TARGET_SNAPSHOT_PIXELS:
        return src.objective_power
    return src.objective_power * math.sqrt(TARGET_SNAPSHOT_PIXELS / full_area)


def apply_watermark(image: np.ndarray, logo: np.ndarray) -> np.ndarray:
    """Alpha-composite the RGBA logo bottom-center, scaled to 8% of the
    image height with a 2% bottom margin."""
    if logo.ndim != 3 or logo.shape[2] != 4:
        raise InvalidImage("logo must be RGBA")
    img_h, img_w = image.shape[:2]
    logo_h, logo_w = logo.shape[:2]
    target_h = max(1, _round_half_up(img_h * WATERMARK_HEIGHT_FRACTION))
    target_w = max(1, _round_half_up(logo_w * target_h / logo_h))
    margin = _round_half_up(img_h * WATERMARK_MARGIN_FRACTION)
    y = img_h - margin - target_h
    if target_w > img_w or y < 0:
        raise LogoTooLarge(
            f"logo {logo_w}x{logo_h} scales to {target_w}x{target_h}, "
            f"image is {img_w}x{img_h}"
        )
    if (logo_w, logo_h) != (target_w, target_h):
        scaled = Image.fromarray(logo).resize((target_w, target_h), Image.BOX)
        logo = np.asarray(scaled, dtype=np.uint8)
    x = (img_w - target_w) // 2

    out = image.copy()
    patch = out[y : y + target_h, x : x + target_w].astype(np.uint32)
    rgb = logo[:, :, :3].astype(np.uint32)
    alpha = logo[:, :, 3:4].astype(np.uint32)
    blended = (2 * (rgb * alpha + patch * (255 - alpha)) + 255) // 510
    out[y : y + target_h, x : x + target_w] = blended.astype(np.uint8)
    return out


def create_snapshot(
    src: SlideSource, config: SnapshotConfig, out_dir: str | Path
) -> SnapshotResult:
    """Read the centered region, watermark if configured, write
    ``{slide_stem}.jpg`` into out_dir."""
    m = config.magnification
    if m is None:
        m = default_snapshot_magnification(src, config.fraction)
    dims = src.dimensions_at(m)
    region = compute_center_region(dims, config.fraction, m)
    image = src.read_region(region)
    if config.watermark_path is not None:
        logo = load_image_rgba(config.watermark_path)
        image = apply_watermark(image, logo)
    data = encode_jpeg(image, config.jpeg_quality)
    out_path = Path(out_dir) / f"{src.path.stem}.jpg"
    try:
        out_path.write_bytes(data)
    except OSError as exc:
        raise IoError(f"cannot write {out_path}: {exc}") from exc
    return SnapshotResult(
        region=region,
        jpeg_path=out_path,
        width=region.width,
        height=region.height,
    )


def review_override(manual_jpeg: str | Path, processing_dir: str | Path) -> Path:
    """Stage a manually taken snapshot so the next pipeline run publishes
    it instead of the automatic one."""
    source = Path(manual_jpeg)
    if source.suffix.lower() != ".jpg" or not source.stem:
        raise UnknownNamePattern(
            f"{source.name}: expected a non-empty specimen id with .jpg suffix"
        )
    try:
        with Image.open(source) as img:
            if img.format != "JPEG":
                raise InvalidImage(f"{source}: not a JPEG ({img.format})")
            img.verify()
    except InvalidImage:
        raise
    except Exception as exc:
        raise InvalidImage(f"{source}: {exc}") from exc
    target = Path(processing_dir) / source.name
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(source, target)
    except OSError as exc:
        raise IoError(f"cannot stage {target}: {exc}") from exc
    return target

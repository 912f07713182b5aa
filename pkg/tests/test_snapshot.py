import io
import math

import numpy as np
import pytest
from PIL import Image

from slidepress.errors import InvalidImage, LogoTooLarge, UnknownNamePattern
from slidepress.slide import Region
from slidepress.snapshot import (
    SnapshotConfig,
    apply_watermark,
    compute_center_region,
    create_snapshot,
    default_snapshot_magnification,
    review_override,
)
from slidepress.synthetic import SyntheticSpec, generate_synthetic

from .oracles import composite_bruteforce


# --- center region math ---


def test_center_quarter_example():
    region = compute_center_region((10000, 8000), 0.25)
    assert (region.x, region.y, region.width, region.height) == (2500, 2000, 5000, 4000)


def test_center_full_fraction_identity():
    region = compute_center_region((643, 487), 1.0)
    assert (region.x, region.y, region.width, region.height) == (0, 0, 643, 487)


def test_center_odd_dims_rounding():
    # 101 * sqrt(0.25) = 50.5 rounds half-up to 51
    region = compute_center_region((101, 101), 0.25)
    assert (region.x, region.y, region.width, region.height) == (25, 25, 51, 51)
    # brute-force check: 51 is the integer closest to 50.5 with half-up,
    # i.e. no integer w has |w - 50.5| < |51 - 50.5| except the tie at 50
    assert abs(51 - 50.5) <= abs(50 - 50.5)


@pytest.mark.parametrize("seed", range(5))
def test_center_region_properties(seed, rng):
    r = np.random.default_rng(seed)
    for _ in range(200):
        full_w = int(r.integers(1, 20000))
        full_h = int(r.integers(1, 20000))
        frac = float(r.uniform(0.05, 1.0))
        region = compute_center_region((full_w, full_h), frac)
        # margins symmetric within 1px
        assert abs((region.x) - (full_w - region.width - region.x)) <= 1
        assert abs((region.y) - (full_h - region.height - region.y)) <= 1
        # area within one row+column of the requested fraction
        assert abs(region.width * region.height - frac * full_w * full_h) <= (
            region.width + region.height + 1
        )
        assert 0 <= region.x and region.x + region.width <= full_w
        assert 0 <= region.y and region.y + region.height <= full_h


def test_center_rejects_bad_fraction():
    with pytest.raises(ValueError):
        compute_center_region((10, 10), 0.0)
    with pytest.raises(ValueError):
        compute_center_region((10, 10), 1.5)


# --- watermarking ---


def _white(h, w):
    return np.full((h, w, 3), 255, dtype=np.uint8)


def test_transparent_logo_is_identity(rng):
    image = rng.integers(0, 256, (500, 400, 3), dtype=np.uint8)
    logo = np.zeros((100, 300, 4), dtype=np.uint8)
    logo[:, :, :3] = 255  # color present, alpha zero
    assert np.array_equal(apply_watermark(image, logo), image)


def test_opaque_logo_composites_bottom_center():
    image = _white(1000, 1000)
    logo = np.zeros((20, 100, 4), dtype=np.uint8)
    logo[:, :, 0] = 200
    logo[:, :, 3] = 255
    out = apply_watermark(image, logo)
    # 8% of 1000 = 80 high, aspect 5:1 -> 400 wide; margin 20
    y0, x0 = 1000 - 20 - 80, 300
    expected = np.asarray(
        composite_bruteforce(
            image,
            np.asarray(
                Image.fromarray(logo).resize((400, 80), Image.BOX), dtype=np.uint8
            ),
            x0,
            y0,
        ),
        dtype=np.uint8,
    )
    assert np.array_equal(out, expected)
    # untouched outside the composited rectangle
    mask = np.ones((1000, 1000), dtype=bool)
    mask[y0 : y0 + 80, x0 : x0 + 400] = False
    assert (out[mask] == 255).all()


def test_semitransparent_blend_matches_bruteforce(rng):
    image = rng.integers(0, 256, (200, 300, 3), dtype=np.uint8)
    logo = rng.integers(0, 256, (16, 32, 4), dtype=np.uint8)
    out = apply_watermark(image, logo)
    assert out.shape == image.shape
    # scaled logo target: height 16, width 32 (identical -> no resize)
    y0 = 200 - 4 - 16
    x0 = (300 - 32) // 2
    expected = np.asarray(
        composite_bruteforce(image, logo, x0, y0), dtype=np.uint8
    )
    assert np.array_equal(out, expected)


def test_logo_taller_than_image_rejected():
    image = _white(100, 100)
    # taller than the image and, after scaling to 8% height, far wider
    logo = np.zeros((200, 5000, 4), dtype=np.uint8)
    logo[:, :, 3] = 255
    with pytest.raises(LogoTooLarge):
        apply_watermark(image, logo)


def test_non_rgba_logo_rejected():
    with pytest.raises(InvalidImage):
        apply_watermark(_white(10, 10), np.zeros((4, 4, 3), dtype=np.uint8))


# --- snapshot creation ---


def test_snapshot_dimensions(tmp_path):
    spec = SyntheticSpec(pattern="checker", width=4096, height=3072, cell=256)
    with generate_synthetic(spec, tmp_path / "s.wtif") as src:
        result = create_snapshot(
            src, SnapshotConfig(magnification=10.0, fraction=0.25), tmp_path
        )
    assert (result.width, result.height) == (512, 384)
    with Image.open(result.jpeg_path) as img:
        assert img.size == (512, 384)
        assert img.format == "JPEG"


def test_snapshot_of_white_slide_is_white(tmp_path):
    spec = SyntheticSpec(pattern="solid", width=800, height=600)
    with generate_synthetic(spec, tmp_path / "w.wtif") as src:
        result = create_snapshot(src, SnapshotConfig(magnification=40.0), tmp_path)
    decoded = np.asarray(Image.open(result.jpeg_path).convert("RGB"), dtype=int)
    assert np.abs(decoded - 255).max() <= 2


def test_offcenter_signal_is_missed(tmp_path):
    # all spots land in the top-left 10%: the centered quarter holds none
    spec = SyntheticSpec(pattern="spots", width=1000, height=1000, seed=13,
                         spot_count=30)
    from slidepress.synthetic import render_with_truth

    raster, truth = render_with_truth(spec)
    corner = np.zeros_like(raster)
    corner[:100, :100] = raster[:100, :100]  # keep only the corner signal
    from slidepress import wtif

    path = tmp_path / "offset.wtif"
    wtif.write_wtif(path, [corner], tile_size=256)
    wtif.write_meta(wtif.meta_path_for(path), 40.0)
    from slidepress.slide import open_slide

    with open_slide(path) as src:
        result = create_snapshot(src, SnapshotConfig(magnification=40.0), tmp_path)
        region = result.region
        assert region.x > 100 and region.y > 100  # center misses the corner
        decoded = np.asarray(
            Image.open(result.jpeg_path).convert("RGB"), dtype=np.uint8
        )
    lum = decoded.astype(int).sum(axis=2)
    assert (lum > 3 * 60).sum() == 0  # zero signal pixels in the snapshot


def test_snapshot_round_trips_full_fraction(tmp_path):
    spec = SyntheticSpec(pattern="solid", width=320, height=240)
    with generate_synthetic(spec, tmp_path / "f.wtif") as src:
        result = create_snapshot(
            src, SnapshotConfig(magnification=40.0, fraction=1.0), tmp_path
        )
    assert (result.width, result.height) == (320, 240)


def test_watermarked_snapshot(tmp_path):
    logo = np.zeros((16, 64, 4), dtype=np.uint8)
    logo[:, :, 1] = 255
    logo[:, :, 3] = 255
    logo_path = tmp_path / "logo.png"
    Image.fromarray(logo).save(logo_path)
    spec = SyntheticSpec(pattern="solid", width=640, height=480)
    with generate_synthetic(spec, tmp_path / "wm.wtif") as src:
        result = create_snapshot(
            src,
            SnapshotConfig(magnification=40.0, watermark_path=logo_path),
            tmp_path,
        )
    decoded = np.asarray(Image.open(result.jpeg_path).convert("RGB"), dtype=int)
    h = decoded.shape[0]
    band = decoded[int(h * 0.9) : int(h * 0.96)]
    assert (band[:, :, 1] > band[:, :, 0] + 50).any()  # green logo visible


def test_default_magnification_targets_45mp(tmp_path):
    spec = SyntheticSpec(pattern="solid", width=2000, height=1500)
    with generate_synthetic(spec, tmp_path / "a.wtif") as src:
        # small slide: even full power can't reach 45 MP
        assert default_snapshot_magnification(src, 0.25) == 40.0
        src.base_width = 60000
        src.base_height = 40000
        m = default_snapshot_magnification(src, 0.25)
        w = math.ceil(60000 * m / 40.0)
        h = math.ceil(40000 * m / 40.0)
        area = (w * math.sqrt(0.25)) * (h * math.sqrt(0.25))
        assert area == pytest.approx(45_000_000, rel=0.001)
        assert m < 40.0


# --- review override ---


def _jpeg_bytes():
    buf = io.BytesIO()
    Image.fromarray(np.full((32, 32, 3), 99, dtype=np.uint8)).save(
        buf, format="JPEG"
    )
    return buf.getvalue()


def test_review_override_stages_file(tmp_path):
    manual = tmp_path / "S12345.jpg"
    manual.write_bytes(_jpeg_bytes())
    processing = tmp_path / "processing"
    staged = review_override(manual, processing)
    assert staged == processing / "S12345.jpg"
    assert staged.read_bytes() == manual.read_bytes()


def test_review_override_rejects_non_jpeg_payload(tmp_path):
    fake = tmp_path / "S1.jpg"
    fake.write_bytes(b"definitely not a jpeg")
    with pytest.raises(InvalidImage):
        review_override(fake, tmp_path / "p")


def test_review_override_rejects_png_payload(tmp_path):
    buf = io.BytesIO()
    Image.fromarray(np.zeros((8, 8, 3), dtype=np.uint8)).save(buf, format="PNG")
    fake = tmp_path / "S2.jpg"
    fake.write_bytes(buf.getvalue())
    with pytest.raises(InvalidImage):
        review_override(fake, tmp_path / "p")


def test_review_override_rejects_bad_names(tmp_path):
    empty_stem = tmp_path / ".jpg"
    empty_stem.write_bytes(_jpeg_bytes())
    with pytest.raises(UnknownNamePattern):
        review_override(empty_stem, tmp_path / "p")
    wrong_ext = tmp_path / "S3.jpeg"
    wrong_ext.write_bytes(_jpeg_bytes())
    with pytest.raises(UnknownNamePattern):
        review_override(wrong_ext, tmp_path / "p")

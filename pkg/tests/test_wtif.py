import numpy as np
import pytest

from slidepress import wtif
from slidepress.errors import (
    MalformedContainer,
    MissingFile,
    SlidepressError,
    UnsupportedFeature,
)

from .malformed import MALFORMED_CASES, valid_single_level


def test_roundtrip_uncompressed(tmp_path, rng):
    raster = rng.integers(0, 256, (100, 130, 3), dtype=np.uint8)
    path = tmp_path / "a.wtif"
    wtif.write_wtif(path, [raster], tile_size=64)
    with wtif.WtifFile(path) as f:
        level = f.levels[0]
        assert (level.width, level.height) == (130, 100)
        assert level.tiles_across == 3 and level.tiles_down == 2
        # stitch tiles back, cropping the padding
        out = np.zeros_like(raster)
        for ty in range(level.tiles_down):
            for tx in range(level.tiles_across):
                tile = f.read_tile(0, ty * level.tiles_across + tx)
                y0, x0 = ty * 64, tx * 64
                h = min(64, 100 - y0)
                w = min(64, 130 - x0)
                out[y0 : y0 + h, x0 : x0 + w] = tile[:h, :w]
    assert np.array_equal(out, raster)


def test_roundtrip_jpeg_level(tmp_path):
    raster = np.full((64, 64, 3), 200, dtype=np.uint8)
    path = tmp_path / "j.wtif"
    wtif.write_wtif(path, [raster], tile_size=64, compression="jpeg", jpeg_quality=95)
    with wtif.WtifFile(path) as f:
        tile = f.read_tile(0, 0)
    assert np.abs(tile.astype(int) - 200).max() <= 3


def test_multi_level_chain(tmp_path, rng):
    base = rng.integers(0, 256, (64, 96, 3), dtype=np.uint8)
    half = rng.integers(0, 256, (32, 48, 3), dtype=np.uint8)
    path = tmp_path / "m.wtif"
    wtif.write_wtif(path, [base, half], tile_size=32)
    with wtif.WtifFile(path) as f:
        assert [(l.width, l.height) for l in f.levels] == [(96, 64), (48, 32)]


def test_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        wtif.WtifFile(tmp_path / "nope.wtif")


def test_builder_baseline_is_valid(tmp_path):
    # the corpus builder must produce parseable files when not sabotaged
    path = tmp_path / "ok.wtif"
    path.write_bytes(valid_single_level())
    with wtif.WtifFile(path) as f:
        assert f.levels[0].width == 32


@pytest.mark.parametrize("name", sorted(MALFORMED_CASES))
def test_malformed_corpus(tmp_path, name):
    path = tmp_path / f"{name}.wtif"
    path.write_bytes(MALFORMED_CASES[name])
    with pytest.raises((MalformedContainer, UnsupportedFeature)):
        wtif.WtifFile(path)


def test_corpus_has_at_least_30_cases():
    assert len(MALFORMED_CASES) >= 30


def test_header_fuzz_short(tmp_path, rng):
    """Random header mutations never escape the typed error hierarchy
    (the full 1e5-iteration run lives in the acceptance suite)."""
    base = bytearray(valid_single_level())
    path = tmp_path / "fuzz.wtif"
    for _ in range(2000):
        mutated = bytearray(base)
        for _ in range(rng.integers(1, 6)):
            pos = int(rng.integers(0, min(len(mutated), 200)))
            mutated[pos] = int(rng.integers(0, 256))
        path.write_bytes(mutated)
        try:
            with wtif.WtifFile(path) as f:
                for i, level in enumerate(f.levels):
                    for t in range(
                        min(2, level.tiles_across * level.tiles_down)
                    ):
                        f.read_tile(i, t)
        except SlidepressError:
            pass


# --- sidecar metadata ---


def test_meta_roundtrip(tmp_path):
    path = tmp_path / "s.meta"
    wtif.write_meta(path, 40.0, 0.25, 0.25)
    assert wtif.parse_meta(path) == {
        "objective_power": 40.0,
        "mpp_x": 0.25,
        "mpp_y": 0.25,
    }


def test_meta_comments_and_unknown_keys(tmp_path):
    path = tmp_path / "s.meta"
    path.write_text("# scanner metadata\nobjective_power = 20\nvendor=acme\n")
    assert wtif.parse_meta(path) == {"objective_power": 20.0}


def test_meta_is_case_sensitive(tmp_path):
    path = tmp_path / "s.meta"
    path.write_text("Objective_Power=20\n")
    assert wtif.parse_meta(path) == {}


def test_meta_bad_value(tmp_path):
    path = tmp_path / "s.meta"
    path.write_text("objective_power=fast\n")
    with pytest.raises(MalformedContainer):
        wtif.parse_meta(path)


def test_meta_rejects_nonpositive(tmp_path):
    path = tmp_path / "s.meta"
    path.write_text("objective_power=-40\n")
    with pytest.raises(MalformedContainer):
        wtif.parse_meta(path)

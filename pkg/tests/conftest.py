import numpy as np
import pytest

from slidepress.synthetic import SyntheticSpec, generate_synthetic


@pytest.fixture(scope="session")
def fixtures_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("fixtures")


@pytest.fixture(scope="session")
def checker_slide(fixtures_dir):
    """4096x3072 checkerboard with exactly 3 stored levels."""
    spec = SyntheticSpec(
        pattern="checker", width=4096, height=3072, cell=128, levels=3,
        objective_power=40.0,
    )
    path = fixtures_dir / "checker_4096x3072.wtif"
    src = generate_synthetic(spec, path)
    src.close()
    return path


@pytest.fixture(scope="session")
def one_tile_slide(fixtures_dir):
    """Single-IFD 256x256 slide with seeded noise content."""
    rng = np.random.default_rng(42)
    raster = rng.integers(0, 256, (256, 256, 3), dtype=np.uint8)
    from slidepress import wtif

    path = fixtures_dir / "one_tile_256.wtif"
    wtif.write_wtif(path, [raster], tile_size=256)
    wtif.write_meta(wtif.meta_path_for(path), 20.0, 0.5, 0.5)
    np.save(fixtures_dir / "one_tile_256.npy", raster)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

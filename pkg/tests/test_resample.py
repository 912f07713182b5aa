import numpy as np
import pytest

from slidepress.resample import resize_box

from .oracles import resize_box_means_bruteforce


def _assert_matches_oracle(got, img, out_w, out_h, rect=None):
    """Exact match required except where the true mean sits on a .5
    rounding tie (two float algorithms may legitimately split there)."""
    means = np.asarray(resize_box_means_bruteforce(img, out_w, out_h, rect))
    expected = np.floor(means + 0.5).clip(0, 255).astype(np.uint8)
    tie = np.abs(means - np.floor(means) - 0.5) < 1e-9
    assert np.array_equal(got[~tie], expected[~tie])
    assert (np.abs(got.astype(int) - expected.astype(int)) <= 1).all()


@pytest.mark.parametrize(
    "src_shape,out",
    [((12, 12), (5, 5)), ((30, 20), (7, 11)), ((9, 13), (9, 13)), ((16, 16), (3, 5))],
)
def test_matches_coverage_bruteforce(src_shape, out, rng):
    img = rng.integers(0, 256, (*src_shape, 3), dtype=np.uint8)
    out_w, out_h = out
    got = resize_box(img, out_w, out_h)
    assert got.shape == (out_h, out_w, 3)
    _assert_matches_oracle(got, img, out_w, out_h)


def test_fractional_rect(rng):
    img = rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)
    rect = (1.25, 2.5, 17.75, 18.5)
    got = resize_box(img, 6, 4, rect)
    _assert_matches_oracle(got, img, 6, 4, rect)


def test_identity_when_same_size(rng):
    img = rng.integers(0, 256, (10, 14, 3), dtype=np.uint8)
    assert np.array_equal(resize_box(img, 14, 10), img)


def test_constant_field_stays_constant():
    img = np.full((50, 70, 3), 201, dtype=np.uint8)
    out = resize_box(img, 13, 7)
    assert (out == 201).all()


def test_mean_preserved_on_exact_blocks():
    img = np.zeros((4, 4, 3), dtype=np.uint8)
    img[:2, :2] = 100  # one quadrant
    out = resize_box(img, 1, 1)
    assert out[0, 0, 0] == 25


def test_bad_rect_rejected(rng):
    img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
    with pytest.raises(ValueError):
        resize_box(img, 4, 4, (0.0, 0.0, 9.0, 8.0))
    with pytest.raises(ValueError):
        resize_box(img, 0, 4)


def test_banding_consistent_with_single_shot(rng):
    # tall output forces multiple slabs; compare against the plain oracle
    img = rng.integers(0, 256, (64, 8, 3), dtype=np.uint8)
    got = resize_box(img, 4, 40)
    _assert_matches_oracle(got, img, 4, 40)

"""Numpy implementations of the pixel kernels.

These are the fallback used when the compiled extension is unavailable.
Both backends must produce bit-identical results; everything here is
integer arithmetic, so there is no floating-point ordering to worry
about.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

# ITU-R BT.601 luma weights scaled by 1000 so rounding is exact integer math
_LUMA_R = 299
_LUMA_G = 587
_LUMA_B = 114


def luminance(tile: np.ndarray) -> np.ndarray:
    """Per-pixel luma, round-half-up of 0.299R + 0.587G + 0.114B."""
    t = tile.astype(np.uint32)
    lum = _LUMA_R * t[..., 0] + _LUMA_G * t[..., 1] + _LUMA_B * t[..., 2]
    return ((lum + 500) // 1000).astype(np.uint8)


def luminance_stats(tile: np.ndarray, signal_threshold: int) -> tuple[float, float]:
    """Mean luma and fraction of pixels with luma >= signal_threshold."""
    lum = luminance(tile)
    n = lum.size
    total = int(lum.sum(dtype=np.uint64))
    signal = int(np.count_nonzero(lum >= signal_threshold))
    return total / n, signal / n


def downsample_2x2(src: np.ndarray) -> np.ndarray:
    """Halve both dimensions by area averaging, round half up.

    Output is (ceil(h/2), ceil(w/2), 3); ragged right/bottom edges
    average the 2 (or 1) pixels actually present.
    """
    h, w = src.shape[:2]
    oh, ow = (h + 1) // 2, (w + 1) // 2
    acc = np.zeros((oh, ow, src.shape[2]), dtype=np.uint32)
    cnt = np.zeros((oh, ow, 1), dtype=np.uint32)
    for dy in (0, 1):
        for dx in (0, 1):
            part = src[dy::2, dx::2]
            acc[: part.shape[0], : part.shape[1]] += part
            cnt[: part.shape[0], : part.shape[1]] += 1
    return ((acc + cnt // 2) // cnt).astype(np.uint8)

"""Exact area-average (box) resampling with fractional source rectangles.

Each output pixel is the mean of the source region it covers, with
fractional pixels weighted by coverage, rounded half up. Implemented
with a summed-area table: for a piecewise-constant image the integral
over any axis-aligned rectangle is the bilinear interpolation of the
cumulative sum at the four corners, so the result is exact (sums of
uint8 pixels stay exact integers in float64).

Power-of-two downsampling does not come through here; that path uses
kernels.downsample_2x2 so repeated halving stays reproducible.
"""

from __future__ import annotations

import numpy as np

# source rows per slab; bounds peak memory for large inputs
_MAX_SLAB_ROWS = 1024


def _edges(lo: float, hi: float, n: int) -> np.ndarray:
    return lo + (np.arange(n + 1, dtype=np.float64) * (hi - lo)) / n


def _eval_integral(sat: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Bilinear sample of a summed-area table at fractional coordinates."""
    h = sat.shape[0] - 1
    w = sat.shape[1] - 1
    yi = np.minimum(np.floor(ys).astype(np.intp), h - 1)
    xi = np.minimum(np.floor(xs).astype(np.intp), w - 1)
    fy = (ys - yi)[:, None, None]
    fx = (xs - xi)[None, :, None]
    yi = yi[:, None]
    xi = xi[None, :]
    top = sat[yi, xi] * (1.0 - fy) + sat[yi + 1, xi] * fy
    bot = sat[yi, xi + 1] * (1.0 - fy) + sat[yi + 1, xi + 1] * fy
    return top * (1.0 - fx) + bot * fx


def resize_box(
    src: np.ndarray,
    out_w: int,
    out_h: int,
    rect: tuple[float, float, float, float] | None = None,
) -> np.ndarray:
    """Box-resample ``rect`` (x0, y0, x1, y1; default full extent) of
    ``src`` to an (out_h, out_w) raster."""
    if src.ndim == 2:
        src = src[:, :, None]
    h, w, c = src.shape
    if rect is None:
        rect = (0.0, 0.0, float(w), float(h))
    x0, y0, x1, y1 = (float(v) for v in rect)
    if not (0.0 <= x0 < x1 <= w and 0.0 <= y0 < y1 <= h):
        raise ValueError(f"rect {rect} outside source {w}x{h}")
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")

    xs = np.minimum(_edges(x0, x1, out_w), float(w))
    ys_all = np.minimum(_edges(y0, y1, out_h), float(h))
    col_w = np.diff(xs)

    out = np.empty((out_h, out_w, c), dtype=np.uint8)
    # slab over source rows so the cumulative table stays small
    step = (y1 - y0) / out_h
    band = max(1, min(out_h, int(_MAX_SLAB_ROWS / max(step, 1.0))))
    for i0 in range(0, out_h, band):
        i1 = min(i0 + band, out_h)
        ys = ys_all[i0 : i1 + 1]
        r0 = int(np.floor(ys[0]))
        r1 = min(int(np.ceil(ys[-1])), h)
        slab = src[r0:r1].astype(np.float64)
        sat = np.zeros((r1 - r0 + 1, w + 1, c), dtype=np.float64)
        np.cumsum(slab, axis=0, out=sat[1:, 1:])
        np.cumsum(sat[1:, 1:], axis=1, out=sat[1:, 1:])
        grid = _eval_integral(sat, ys - r0, xs)
        cell = grid[1:, 1:] - grid[:-1, 1:] - grid[1:, :-1] + grid[:-1, :-1]
        area = (np.diff(ys)[:, None] * col_w[None, :])[:, :, None]
        vals = np.floor(cell / area + 0.5)
        out[i0:i1] = np.clip(vals, 0.0, 255.0).astype(np.uint8)
    return out if c > 1 else out[:, :, 0]

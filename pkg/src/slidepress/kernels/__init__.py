"""Pixel kernel dispatch: compiled extension if built, numpy otherwise.

Set SLIDEPRESS_PURE_PYTHON=1 to force the numpy fallback (used by the
benchmark and the backend-parity tests).
"""

import os

import numpy as np

from . import _pure

if os.environ.get("SLIDEPRESS_PURE_PYTHON") == "1":
    _impl = _pure
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND: str = _impl.BACKEND


def luminance(tile: np.ndarray) -> np.ndarray:
    return _impl.luminance(np.ascontiguousarray(tile))


def luminance_stats(tile: np.ndarray, signal_threshold: int) -> tuple[float, float]:
    return _impl.luminance_stats(np.ascontiguousarray(tile), signal_threshold)


def downsample_2x2(src: np.ndarray) -> np.ndarray:
    return _impl.downsample_2x2(np.ascontiguousarray(src))


__all__ = ["BACKEND", "luminance", "luminance_stats", "downsample_2x2"]

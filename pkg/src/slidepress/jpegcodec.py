"""Pinned JPEG settings shared by everything that encodes or measures.

Verdicts of the compression-based empty-tile filter depend on encoded
size, and pyramid builds must be byte-reproducible, so quality and
chroma subsampling are fixed here rather than left to encoder defaults.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DecodeError, EncodeError

SUBSAMPLING_420 = 2


def encode_jpeg(image: np.ndarray, quality: int) -> bytes:
    if not 1 <= quality <= 100:
        raise EncodeError(f"jpeg quality {quality} outside 1..100")
    buf = io.BytesIO()
    try:
        Image.fromarray(image).save(
            buf, format="JPEG", quality=quality, subsampling=SUBSAMPLING_420
        )
    except Exception as exc:
        raise EncodeError(str(exc)) from exc
    return buf.getvalue()


def decode_image(data: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise DecodeError(str(exc)) from exc


def load_image(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise DecodeError(f"{path}: {exc}") from exc


def load_image_rgba(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGBA"), dtype=np.uint8)
    except Exception as exc:
        raise DecodeError(f"{path}: {exc}") from exc

"""Raster and mask value types, pixel utilities, and lossless PNG I/O.

Images are uint8 numpy arrays of shape (H, W, 3) for RGB or (H, W, 4) for
RGBA. Binary masks are uint8 arrays of shape (H, W) holding exactly {0, 1};
on disk they are single-channel PNGs holding {0, 255}. Soft masks are float
arrays in [0, 1]. All arrays are treated as immutable after construction.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataIOError, InvariantError

#: Grayscale values >= this threshold binarize to 1 when loading masks.
MASK_THRESHOLD = 128

_IMAGE_MODES = {"L", "LA", "RGB", "RGBA"}


def quantize_u8(values) -> np.ndarray:
    """Convert real-valued samples to uint8.

    Rounds half away from zero, then clamps to [0, 255]. This is the single
    rounding rule used everywhere pixel math leaves real arithmetic.
    """
    v = np.asarray(values)
    if v.dtype.kind in "iub":
        v = v.astype(np.float64)
    rounded = np.sign(v) * np.floor(np.abs(v) + 0.5)
    return np.clip(rounded, 0, 255).astype(np.uint8)


def ensure_image(img: np.ndarray) -> np.ndarray:
    """Validate an RGB/RGBA raster; returns the array unchanged."""
    a = np.asarray(img)
    if a.dtype != np.uint8 or a.ndim != 3 or a.shape[2] not in (3, 4):
        raise InvariantError(
            f"expected uint8 (H, W, 3|4) raster, got dtype={a.dtype} shape={a.shape}"
        )
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise InvariantError(f"raster must be at least 1x1, got shape={a.shape}")
    return a


def ensure_mask(mask: np.ndarray) -> np.ndarray:
    """Validate a binary mask; returns the array unchanged."""
    a = np.asarray(mask)
    if a.dtype != np.uint8 or a.ndim != 2:
        raise InvariantError(
            f"expected uint8 (H, W) mask, got dtype={a.dtype} shape={a.shape}"
        )
    if a.max(initial=0) > 1:
        raise InvariantError("mask holds values outside {0, 1}")
    return a


def ensure_same_size(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[:2] != b.shape[:2]:
        raise InvariantError(f"dimension mismatch: {a.shape[:2]} vs {b.shape[:2]}")


def load_png(path, expect: Literal["image", "mask"]) -> np.ndarray:
    """Load an 8-bit PNG as a raster image or a binary mask.

    Masks are binarized at MASK_THRESHOLD, so slightly antialiased sources
    still load cleanly. Images keep their alpha channel if present;
    grayscale images are promoted to RGB (RGBA when they carry alpha).
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode not in _IMAGE_MODES:
                raise DataIOError(
                    f"{path}: unsupported PNG mode {mode!r}; only 8-bit "
                    "grayscale, RGB, or RGBA is accepted"
                )
            if im.width < 1 or im.height < 1:
                raise DataIOError(f"{path}: zero-sized image")
            if expect == "mask":
                gray = np.asarray(im.convert("L"))
                return (gray >= MASK_THRESHOLD).astype(np.uint8)
            if expect == "image":
                if mode == "L":
                    im = im.convert("RGB")
                elif mode == "LA":
                    im = im.convert("RGBA")
                return np.asarray(im).copy()
            raise InvariantError(f"expect must be 'image' or 'mask', got {expect!r}")
    except FileNotFoundError as exc:
        raise DataIOError(f"{path}: file not found") from exc
    except UnidentifiedImageError as exc:
        raise DataIOError(f"{path}: not a decodable image ({exc})") from exc


def save_png(arr: np.ndarray, path, compress_level: int = 3) -> None:
    """Write a raster or mask as PNG; load_png(save_png(x)) is the identity.

    Masks are written as single-channel {0, 255} so they are visually
    inspectable on disk. Parent directories are created as needed. The
    compression level trades file size for speed; any fixed level keeps
    output bytes deterministic.
    """
    path = Path(path)
    a = np.asarray(arr)
    if a.ndim == 2:
        ensure_mask(a)
        im = Image.fromarray(a * np.uint8(255), mode="L")
    else:
        ensure_image(a)
        im = Image.fromarray(a, mode="RGB" if a.shape[2] == 3 else "RGBA")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        im.save(path, format="PNG", compress_level=compress_level)
    except OSError as exc:
        raise DataIOError(f"{path}: cannot write PNG ({exc})") from exc


def mask_area(mask: np.ndarray) -> int:
    """Number of 1-pixels."""
    return int(ensure_mask(mask).sum())


def mask_union(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-pixel logical OR of two masks of equal dimensions."""
    ensure_mask(a)
    ensure_mask(b)
    ensure_same_size(a, b)
    return np.maximum(a, b)

"""Alpha, Gaussian, and Laplacian blending of a foreground onto a background.

All pyramid arithmetic happens in float32 on reflection-padded arrays; the
result is cropped back and quantized to 8-bit exactly once at the end. The
single fixed kernel is the 5-tap binomial [1, 4, 6, 4, 1] / 16, used for
pyramid blurring, for upsample interpolation (scaled by 2 per axis to restore
mass after zero insertion), and for the soft-mask blur of Gaussian blending.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvariantError
from .imgcore import ensure_mask, ensure_same_size, quantize_u8

KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0], dtype=np.float32) / 16.0

#: Default pyramid depth; on 224-512 px images the top level stays >= 28 px.
DEFAULT_LEVELS = 4


@dataclass
class Pyramid:
    """Multi-resolution decomposition; level 0 is full (padded) resolution."""

    levels: list[np.ndarray]
    kind: str  # "gaussian" | "laplacian"
    original_size: tuple[int, int]  # (height, width) before padding


def _blur(a: np.ndarray, kernel: np.ndarray = KERNEL) -> np.ndarray:
    out = ndimage.convolve1d(a, kernel, axis=0, mode="reflect")
    return ndimage.convolve1d(out, kernel, axis=1, mode="reflect")


def _decimate(a: np.ndarray) -> np.ndarray:
    return a[::2, ::2]


def _upsample_axis0(x: np.ndarray) -> np.ndarray:
    """Zero-insert along axis 0 and blur with 2x the kernel, in polyphase
    form (even/odd output rows computed separately) so no time is spent on
    the inserted zeros. Boundaries reflect the source signal (x[-1] = x[0],
    x[n] = x[n-1]), which keeps the interpolator mass-preserving at the
    edges: upsampling a constant yields that constant everywhere."""
    k0, k1, k2, k3, k4 = KERNEL * 2.0
    xe = np.concatenate([x[:1], x, x[-1:]], axis=0)
    out = np.empty((2 * x.shape[0],) + x.shape[1:], dtype=x.dtype)
    out[::2] = k0 * xe[:-2] + k2 * xe[1:-1] + k4 * xe[2:]
    out[1::2] = k1 * xe[1:-1] + k3 * xe[2:]
    return out


def _upsample(a: np.ndarray) -> np.ndarray:
    """Zero-insertion upsample by 2 per axis, interpolated with 2x the kernel."""
    out = _upsample_axis0(a)
    return np.swapaxes(_upsample_axis0(np.swapaxes(out, 0, 1)), 0, 1)


def pad_to_multiple(a: np.ndarray, multiple: int) -> np.ndarray:
    """Reflection-pad bottom/right so both spatial dims divide `multiple`."""
    h, w = a.shape[:2]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return a
    pad = ((0, ph), (0, pw)) + ((0, 0),) * (a.ndim - 2)
    return np.pad(a, pad, mode="symmetric")


def _as_float(img: np.ndarray) -> np.ndarray:
    a = np.asarray(img)
    return a.astype(np.float32) if a.dtype != np.float32 else a


def _check_levels(img: np.ndarray, levels: int) -> None:
    if levels < 1:
        raise InvariantError(f"levels must be >= 1, got {levels}")
    if 2 ** (levels - 1) > min(img.shape[:2]):
        raise InvariantError(
            f"levels={levels} exceeds log2 of min dimension {min(img.shape[:2])}"
        )


def build_gaussian_pyramid(img: np.ndarray, levels: int) -> Pyramid:
    """Blur-decimate pyramid. Each level halves both spatial dimensions."""
    _check_levels(img, levels)
    original = img.shape[:2]
    current = pad_to_multiple(_as_float(img), 2 ** (levels - 1))
    out = [current]
    for _ in range(levels - 1):
        current = _decimate(_blur(current))
        out.append(current)
    return Pyramid(levels=out, kind="gaussian", original_size=original)


def build_laplacian_pyramid(img: np.ndarray, levels: int) -> Pyramid:
    """Band-pass pyramid: L_i = G_i - upsample(G_{i+1}); the top level is the
    residual low-pass G_top, so collapse() reconstructs the input exactly up
    to float rounding."""
    gp = build_gaussian_pyramid(img, levels)
    g = gp.levels
    out = [g[i] - _upsample(g[i + 1]) for i in range(levels - 1)]
    out.append(g[-1])
    return Pyramid(levels=out, kind="laplacian", original_size=gp.original_size)


def _collapse_float(levels: list[np.ndarray]) -> np.ndarray:
    acc = levels[-1]
    for detail in reversed(levels[:-1]):
        acc = _upsample(acc) + detail
    return acc


def collapse(p: Pyramid) -> np.ndarray:
    """Rebuild the 8-bit image from a Laplacian pyramid (crop, then quantize)."""
    if p.kind != "laplacian":
        raise InvariantError(f"collapse expects a laplacian pyramid, got {p.kind!r}")
    acc = _collapse_float(p.levels)
    h, w = p.original_size
    return quantize_u8(acc[:h, :w])


def alpha_blend(fg: np.ndarray, bg: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Per-pixel convex combination alpha*fg + (1-alpha)*bg.

    `alpha` is a (H, W) matte, either binary {0, 1} (reducing to a hard copy)
    or real-valued in [0, 1].
    """
    ensure_same_size(fg, bg)
    ensure_same_size(fg, alpha)
    a = np.asarray(alpha, dtype=np.float32)[..., None]
    out = a * _as_float(fg) + (1.0 - a) * _as_float(bg)
    return quantize_u8(out)


def erode_mask(mask: np.ndarray, size: int = 3) -> np.ndarray:
    """Binary erosion with a square structuring element (border treated as 0)."""
    structure = np.ones((size, size), dtype=bool)
    return ndimage.binary_erosion(mask.astype(bool), structure=structure).astype(np.uint8)


def soften_mask(mask: np.ndarray) -> np.ndarray:
    """Erode (3x3) then blur (5-tap binomial, separable) a binary mask into a
    real-valued matte in [0, 1]."""
    ensure_mask(mask)
    return _blur(erode_mask(mask, 3).astype(np.float32))


def gaussian_blend(
    fg: np.ndarray, bg: np.ndarray, mask: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Alpha blending through a softened mask; returns (image, soft mask)."""
    ensure_same_size(fg, bg)
    ensure_same_size(fg, mask)
    soft = soften_mask(mask)
    return alpha_blend(fg, bg, soft), soft


def laplacian_blend(
    fg: np.ndarray, bg: np.ndarray, mask: np.ndarray, levels: int = DEFAULT_LEVELS
) -> np.ndarray:
    """Multi-scale blend: combine the Laplacian pyramids of fg and bg with the
    mask's Gaussian pyramid as per-level weights, then collapse."""
    ensure_same_size(fg, bg)
    ensure_same_size(fg, mask)
    ensure_mask(mask)
    _check_levels(fg, levels)
    lf = build_laplacian_pyramid(fg, levels)
    lb = build_laplacian_pyramid(bg, levels)
    gm = build_gaussian_pyramid(mask.astype(np.float32), levels)
    combined = [
        w[..., None] * f + (1.0 - w[..., None]) * b
        for w, f, b in zip(gm.levels, lf.levels, lb.levels)
    ]
    acc = _collapse_float(combined)
    h, w = lf.original_size
    return quantize_u8(acc[:h, :w])

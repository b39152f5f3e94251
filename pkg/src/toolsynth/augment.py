"""Parametric intensity and geometry transforms with mask-consistent warps.

A transform is a (kind, params) pair; a chain is an ordered sequence of
transforms plus the seed it was sampled from, so replaying a stored chain
record reproduces its output bit-exactly. Geometric transforms resample
images bilinearly with reflection padding and masks nearest-neighbor with
zero fill, through one shared homography engine, so image and mask always
receive the identical spatial map.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InvariantError
from .imgcore import ensure_image, quantize_u8

GEOMETRIC_KINDS = frozenset({"hflip", "vflip", "crop", "affine", "perspective"})
INTENSITY_KINDS = frozenset(
    {
        "hue_saturation",
        "linear_contrast",
        "gaussian_blur",
        "average_blur",
        "median_blur",
        "sharpen",
        "emboss",
        "additive_gaussian_noise",
    }
)

#: Kinds eligible per sampling profile. Foreground chains stick to flips,
#: crops, blurs, and affine warps so instrument appearance stays faithful;
#: backgrounds draw from the full list.
BACKGROUND_KINDS = (
    "hflip",
    "vflip",
    "crop",
    "affine",
    "perspective",
    "hue_saturation",
    "linear_contrast",
    "gaussian_blur",
    "average_blur",
    "median_blur",
    "sharpen",
    "emboss",
    "additive_gaussian_noise",
)
FOREGROUND_KINDS = (
    "hflip",
    "vflip",
    "crop",
    "affine",
    "gaussian_blur",
    "average_blur",
    "median_blur",
)

_BINOMIAL = {
    3: np.array([1.0, 2.0, 1.0]) / 4.0,
    5: np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0,
    7: np.array([1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0]) / 64.0,
}

# Sum of this kernel is 1, so constant regions are preserved.
_EMBOSS_KERNEL = np.array([[-1.0, -1.0, 0.0], [-1.0, 1.0, 1.0], [0.0, 1.0, 1.0]])


@dataclass(frozen=True)
class AugmentRanges:
    """Sampling ranges for every transform parameter, in one tunable table."""

    chain_length: tuple[int, int] = (2, 6)
    crop_keep: tuple[float, float] = (0.70, 1.0)
    affine_rotation: tuple[float, float] = (-45.0, 45.0)
    affine_scale: tuple[float, float] = (0.7, 1.3)
    affine_translate: tuple[float, float] = (-0.10, 0.10)
    affine_shear: tuple[float, float] = (-10.0, 10.0)
    perspective_scale: tuple[float, float] = (0.0, 0.1)
    hue_saturation_shift: tuple[int, int] = (-30, 30)
    linear_contrast: tuple[float, float] = (0.6, 1.4)
    blur_kernels: tuple[int, ...] = (3, 5, 7)
    sharpen_alpha: tuple[float, float] = (0.0, 1.0)
    emboss_alpha: tuple[float, float] = (0.0, 1.0)
    noise_sigma: tuple[float, float] = (0.0, 0.05 * 255.0)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentRanges":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvariantError(f"unknown augment range keys: {sorted(unknown)}")
        coerced = {
            k: tuple(v) if isinstance(v, (list, tuple)) else v for k, v in data.items()
        }
        return cls(**coerced)


DEFAULT_RANGES = AugmentRanges()


@dataclass(frozen=True)
class TransformParams:
    """One transform: a kind plus its fully resolved, replayable parameters."""

    kind: str
    params: dict

    @property
    def is_geometric(self) -> bool:
        return self.kind in GEOMETRIC_KINDS

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    @classmethod
    def from_json(cls, data: dict) -> "TransformParams":
        return cls(kind=data["kind"], params=data["params"])


@dataclass(frozen=True)
class TransformChainRecord:
    """An ordered transform chain plus the provenance needed to replay it."""

    transforms: tuple[TransformParams, ...]
    source_seed_index: int
    derivation_seed: int

    def to_json(self) -> dict:
        return {
            "transforms": [t.to_json() for t in self.transforms],
            "source_seed_index": self.source_seed_index,
            "derivation_seed": self.derivation_seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "TransformChainRecord":
        return cls(
            transforms=tuple(TransformParams.from_json(t) for t in data["transforms"]),
            source_seed_index=int(data["source_seed_index"]),
            derivation_seed=int(data["derivation_seed"]),
        )


# ---------------------------------------------------------------------------
# Chain sampling


def _uniform(rng, lo_hi) -> float:
    return float(rng.uniform(lo_hi[0], lo_hi[1]))


def _sample_params(kind: str, rng: np.random.Generator, r: AugmentRanges) -> dict:
    if kind in ("hflip", "vflip"):
        return {}
    if kind == "crop":
        keep_w = _uniform(rng, r.crop_keep)
        keep_h = _uniform(rng, r.crop_keep)
        return {
            "x0": float(rng.uniform(0.0, 1.0 - keep_w)),
            "y0": float(rng.uniform(0.0, 1.0 - keep_h)),
            "keep_w": keep_w,
            "keep_h": keep_h,
        }
    if kind == "affine":
        return {
            "rotation": _uniform(rng, r.affine_rotation),
            "scale": _uniform(rng, r.affine_scale),
            "shear": _uniform(rng, r.affine_shear),
            "tx": _uniform(rng, r.affine_translate),
            "ty": _uniform(rng, r.affine_translate),
        }
    if kind == "perspective":
        scale = _uniform(rng, r.perspective_scale)
        jitter = rng.uniform(-scale, scale, size=(4, 2))
        return {"scale": scale, "jitter": jitter.tolist()}
    if kind == "hue_saturation":
        lo, hi = r.hue_saturation_shift
        return {
            "hue_shift": int(rng.integers(lo, hi + 1)),
            "sat_shift": int(rng.integers(lo, hi + 1)),
        }
    if kind == "linear_contrast":
        return {"factor": _uniform(rng, r.linear_contrast)}
    if kind in ("gaussian_blur", "average_blur", "median_blur"):
        return {"kernel": int(r.blur_kernels[rng.integers(len(r.blur_kernels))])}
    if kind == "sharpen":
        return {"alpha": _uniform(rng, r.sharpen_alpha)}
    if kind == "emboss":
        return {"alpha": _uniform(rng, r.emboss_alpha)}
    if kind == "additive_gaussian_noise":
        return {
            "sigma": _uniform(rng, r.noise_sigma),
            "noise_seed": int(rng.integers(0, 2**63)),
        }
    raise InvariantError(f"unknown transform kind {kind!r}")


def sample_chain(
    derivation_seed: int,
    profile: str,
    ranges: AugmentRanges = DEFAULT_RANGES,
    source_seed_index: int = 0,
) -> TransformChainRecord:
    """Sample a 2-6 step transform chain for the given profile.

    The chain is a pure function of derivation_seed, so the returned record
    replays bit-exactly.
    """
    if profile == "background":
        pool = BACKGROUND_KINDS
    elif profile == "foreground":
        pool = FOREGROUND_KINDS
    else:
        raise InvariantError(f"profile must be 'background' or 'foreground', got {profile!r}")
    rng = np.random.default_rng(derivation_seed)
    lo, hi = ranges.chain_length
    length = int(rng.integers(lo, hi + 1))
    transforms = []
    for _ in range(length):
        kind = pool[int(rng.integers(len(pool)))]
        transforms.append(TransformParams(kind, _sample_params(kind, rng, ranges)))
    return TransformChainRecord(
        transforms=tuple(transforms),
        source_seed_index=source_seed_index,
        derivation_seed=derivation_seed,
    )


# ---------------------------------------------------------------------------
# Homography resampling engine


def _inverse_coords(inverse: np.ndarray, out_h: int, out_w: int):
    """Source (y, x) sample coordinates for every output pixel."""
    xs = np.arange(out_w, dtype=np.float64)[None, :]
    ys = np.arange(out_h, dtype=np.float64)[:, None]
    denom = inverse[2, 0] * xs + inverse[2, 1] * ys + inverse[2, 2]
    sx = (inverse[0, 0] * xs + inverse[0, 1] * ys + inverse[0, 2]) / denom
    sy = (inverse[1, 0] * xs + inverse[1, 1] * ys + inverse[1, 2]) / denom
    return sy, sx


def resample_image(
    img: np.ndarray,
    inverse: np.ndarray,
    out_size: tuple[int, int],
    mode: str = "reflect",
    cval: float = 0.0,
) -> np.ndarray:
    """Bilinear warp of a uint8 raster under an output->source homography."""
    out_w, out_h = out_size
    sy, sx = _inverse_coords(inverse, out_h, out_w)
    coords = np.stack([sy, sx])
    channels = [
        ndimage.map_coordinates(
            img[..., c].astype(np.float32), coords, order=1, mode=mode, cval=cval
        )
        for c in range(img.shape[2])
    ]
    return quantize_u8(np.stack(channels, axis=-1))


def resample_image_float(
    img_f: np.ndarray,
    inverse: np.ndarray,
    out_size: tuple[int, int],
    mode: str = "reflect",
    cval: float = 0.0,
) -> np.ndarray:
    """Like resample_image but float in, float out (no quantization)."""
    out_w, out_h = out_size
    sy, sx = _inverse_coords(inverse, out_h, out_w)
    coords = np.stack([sy, sx])
    channels = [
        ndimage.map_coordinates(img_f[..., c], coords, order=1, mode=mode, cval=cval)
        for c in range(img_f.shape[2])
    ]
    return np.stack(channels, axis=-1)


def resample_mask(
    mask: np.ndarray, inverse: np.ndarray, out_size: tuple[int, int]
) -> np.ndarray:
    """Nearest-neighbor warp of a binary mask; output stays strictly {0, 1}."""
    out_w, out_h = out_size
    sy, sx = _inverse_coords(inverse, out_h, out_w)
    coords = np.stack([sy, sx])
    return ndimage.map_coordinates(mask, coords, order=0, mode="constant", cval=0)


def affine_matrix(
    w: int,
    h: int,
    rotation: float = 0.0,
    scale: float = 1.0,
    shear: float = 0.0,
    tx: float = 0.0,
    ty: float = 0.0,
) -> np.ndarray:
    """Forward source->output matrix: scale, shear, rotate about the image
    center, then translate by (tx, ty) fractions of each axis."""
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    theta = math.radians(rotation)
    sh = math.tan(math.radians(shear))
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    rot = np.array([[cos_t, -sin_t, 0.0], [sin_t, cos_t, 0.0], [0.0, 0.0, 1.0]])
    shear_m = np.array([[1.0, sh, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    scale_m = np.diag([scale, scale, 1.0])
    to_origin = np.array([[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]])
    back = np.array([[1.0, 0.0, cx + tx * w], [0.0, 1.0, cy + ty * h], [0.0, 0.0, 1.0]])
    return back @ rot @ shear_m @ scale_m @ to_origin


def homography_from_points(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """3x3 homography mapping four src points onto four dst points."""
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((xs, ys), (xd, yd)) in enumerate(zip(src, dst)):
        a[2 * i] = [xs, ys, 1.0, 0.0, 0.0, 0.0, -xd * xs, -xd * ys]
        a[2 * i + 1] = [0.0, 0.0, 0.0, xs, ys, 1.0, -yd * xs, -yd * ys]
        b[2 * i] = xd
        b[2 * i + 1] = yd
    h = np.linalg.solve(a, b)
    return np.append(h, 1.0).reshape(3, 3)


def _crop_inverse(w: int, h: int, p: dict) -> np.ndarray:
    """Output->source map that crops the kept box and resizes it back to
    (w, h), using the pixel-center resize convention."""
    box_w = max(1, round(p["keep_w"] * w))
    box_h = max(1, round(p["keep_h"] * h))
    x0 = min(round(p["x0"] * w), w - box_w)
    y0 = min(round(p["y0"] * h), h - box_h)
    sx = box_w / w
    sy = box_h / h
    return np.array(
        [
            [sx, 0.0, x0 + 0.5 * sx - 0.5],
            [0.0, sy, y0 + 0.5 * sy - 0.5],
            [0.0, 0.0, 1.0],
        ]
    )


def _perspective_inverse(w: int, h: int, p: dict) -> np.ndarray:
    corners = np.array([[0.0, 0.0], [w - 1.0, 0.0], [w - 1.0, h - 1.0], [0.0, h - 1.0]])
    jitter = np.asarray(p["jitter"], dtype=np.float64) * np.array([w, h], dtype=np.float64)
    # Solve output->source directly; no numeric matrix inversion needed.
    return homography_from_points(corners + jitter, corners)


def _flip_matrix(w: int, h: int, horizontal: bool) -> np.ndarray:
    if horizontal:
        return np.array([[-1.0, 0.0, w - 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    return np.array([[1.0, 0.0, 0.0], [0.0, -1.0, h - 1.0], [0.0, 0.0, 1.0]])


# ---------------------------------------------------------------------------
# Intensity transforms


def _separable_blur(img_f: np.ndarray, kernel1d: np.ndarray) -> np.ndarray:
    out = ndimage.convolve1d(img_f, kernel1d, axis=0, mode="reflect")
    return ndimage.convolve1d(out, kernel1d, axis=1, mode="reflect")


def _rgb_and_alpha(img: np.ndarray):
    if img.shape[2] == 4:
        return img[..., :3], img[..., 3:]
    return img, None


def _merge_alpha(rgb: np.ndarray, alpha) -> np.ndarray:
    if alpha is None:
        return rgb
    return np.concatenate([rgb, alpha], axis=-1)


def _apply_hue_saturation(rgb: np.ndarray, p: dict) -> np.ndarray:
    hsv = np.asarray(Image.fromarray(rgb, "RGB").convert("HSV")).astype(np.int16)
    hsv[..., 0] = (hsv[..., 0] + p["hue_shift"]) % 256
    hsv[..., 1] = np.clip(hsv[..., 1] + p["sat_shift"], 0, 255)
    out = Image.fromarray(hsv.astype(np.uint8), "HSV").convert("RGB")
    return np.asarray(out).copy()


def apply_intensity(img: np.ndarray, t: TransformParams) -> np.ndarray:
    """Apply an intensity transform; dimensions and any paired mask are
    untouched. Noise transforms carry their own sub-seed in params."""
    ensure_image(img)
    if t.kind not in INTENSITY_KINDS:
        raise InvariantError(f"{t.kind!r} is not an intensity transform")
    rgb, alpha = _rgb_and_alpha(img)
    p = t.params
    if t.kind == "hue_saturation":
        out = _apply_hue_saturation(rgb, p)
    elif t.kind == "linear_contrast":
        out = quantize_u8(127.0 + p["factor"] * (rgb.astype(np.float64) - 127.0))
    elif t.kind == "gaussian_blur":
        out = quantize_u8(_separable_blur(rgb.astype(np.float32), _BINOMIAL[p["kernel"]]))
    elif t.kind == "average_blur":
        k = p["kernel"]
        out = quantize_u8(_separable_blur(rgb.astype(np.float32), np.full(k, 1.0 / k)))
    elif t.kind == "median_blur":
        k = p["kernel"]
        out = np.stack(
            [
                ndimage.median_filter(rgb[..., c], size=k, mode="reflect")
                for c in range(3)
            ],
            axis=-1,
        )
    elif t.kind == "sharpen":
        f = rgb.astype(np.float32)
        out = quantize_u8(f + p["alpha"] * (f - _separable_blur(f, _BINOMIAL[3])))
    elif t.kind == "emboss":
        f = rgb.astype(np.float32)
        embossed = np.stack(
            [ndimage.convolve(f[..., c], _EMBOSS_KERNEL, mode="reflect") for c in range(3)],
            axis=-1,
        )
        out = quantize_u8((1.0 - p["alpha"]) * f + p["alpha"] * embossed)
    elif t.kind == "additive_gaussian_noise":
        noise_rng = np.random.default_rng(p["noise_seed"])
        noise = noise_rng.normal(0.0, p["sigma"], size=rgb.shape)
        out = quantize_u8(rgb.astype(np.float64) + noise)
    else:  # pragma: no cover - kinds enumerated above
        raise InvariantError(f"unhandled intensity kind {t.kind!r}")
    return _merge_alpha(out, alpha)


def apply_geometric(
    img: np.ndarray, mask: np.ndarray | None, t: TransformParams
) -> tuple[np.ndarray, np.ndarray | None]:
    """Apply a geometric transform to an image and, when given, its mask.

    Both receive the identical spatial map: bilinear resampling for the
    image, nearest-neighbor with zero fill for the mask, which therefore
    stays strictly binary. A lone image is padded by reflection (no black
    borders on tissue); an image warped together with a mask uses zero fill
    like the mask, so content is never duplicated into regions the mask
    cannot cover and the two stay co-located.
    """
    ensure_image(img)
    if t.kind not in GEOMETRIC_KINDS:
        raise InvariantError(f"{t.kind!r} is not a geometric transform")
    h, w = img.shape[:2]
    if mask is not None and mask.shape[:2] != (h, w):
        raise InvariantError("mask dimensions do not match image")

    if t.kind == "hflip":
        out_img = img[:, ::-1].copy()
        out_mask = None if mask is None else mask[:, ::-1].copy()
        return out_img, out_mask
    if t.kind == "vflip":
        out_img = img[::-1].copy()
        out_mask = None if mask is None else mask[::-1].copy()
        return out_img, out_mask

    if t.kind == "crop":
        inverse = _crop_inverse(w, h, t.params)
    elif t.kind == "affine":
        inverse = np.linalg.inv(affine_matrix(w, h, **t.params))
    else:
        inverse = _perspective_inverse(w, h, t.params)

    img_mode = "reflect" if mask is None else "constant"
    out_img = resample_image(img, inverse, (w, h), mode=img_mode)
    out_mask = None if mask is None else resample_mask(mask, inverse, (w, h))
    return out_img, out_mask


def apply_chain(
    img: np.ndarray,
    mask: np.ndarray | None,
    record: TransformChainRecord,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Apply every transform of a chain record in order (pure function)."""
    out_img, out_mask = img, mask
    for t in record.transforms:
        if t.is_geometric:
            out_img, out_mask = apply_geometric(out_img, out_mask, t)
        else:
            out_img = apply_intensity(out_img, t)
    return out_img, out_mask

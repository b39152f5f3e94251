"""Training-time batch augmentation: chain mixing, coarse dropout, patch mixing.

Three operators over (image, mask) batches, each split into a sampling step
(producing a small, inspectable plan from an rng) and a pure application
step, so tests can force degenerate plans directly:

- chain mixing (cam): blends the outputs of several short color-op chains
  with the original image. Masks are never touched.
- coarse dropout (cdo): zeroes random rectangles/disks in image AND mask
  simultaneously, simulating occlusion.
- patch mixing (epm): per element, exchanges one rectangle of image and mask
  jointly with a random partner in the batch, simulating overlap.

The streaming delivery emits batches as a little-endian byte protocol
starting with the magic "TSYN1"; the offline mode writes the identical
pixels as PNG pairs.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterator

import numpy as np
from PIL import Image, ImageEnhance, ImageOps

from .compose import load_manifest, write_manifest
from .errors import ConfigError, InvariantError
from .imgcore import ensure_mask, load_png, quantize_u8, save_png
from .rng import derive_rng

STREAM_MAGIC = b"TSYN1"

SOFT_OPS = ("autocontrast", "equalize", "posterize", "solarize")
HARD_OPS = SOFT_OPS + ("color", "contrast", "brightness", "sharpness")


@dataclass(frozen=True)
class CamConfig:
    severity: int = 3
    width: int = 3
    depth_range: tuple[int, int] = (1, 3)
    alpha: float = 1.0
    op_set: str = "soft"  # "soft" | "hard"

    def __post_init__(self):
        if not 1 <= self.severity <= 10:
            raise ConfigError(f"cam severity must be in [1, 10], got {self.severity}")
        if self.op_set not in ("soft", "hard"):
            raise ConfigError(f"cam op_set must be 'soft' or 'hard', got {self.op_set!r}")

    @property
    def ops(self) -> tuple[str, ...]:
        return SOFT_OPS if self.op_set == "soft" else HARD_OPS


@dataclass(frozen=True)
class CdoConfig:
    num_range: tuple[int, int] = (1, 8)
    size_range: tuple[float, float] = (0.05, 0.20)
    shapes: tuple[str, ...] = ("rect", "circle")
    apply_prob: float = 0.5


@dataclass(frozen=True)
class EpmConfig:
    prob: float = 0.5


@dataclass
class Batch:
    """Ordered (image, mask) pairs of uniform dimensions."""

    pairs: list[tuple[np.ndarray, np.ndarray]]
    epoch: int = 0
    batch_index: int = 0

    def __post_init__(self):
        if not self.pairs:
            raise InvariantError("batch must be non-empty")
        shape = self.pairs[0][0].shape
        for img, mask in self.pairs:
            if img.shape != shape or mask.shape != shape[:2]:
                raise InvariantError("batch pairs must share dimensions")

    def __len__(self) -> int:
        return len(self.pairs)


# ---------------------------------------------------------------------------
# Chain augmentation mixing


def _op_severity_arg(name: str, severity: int, rng: np.random.Generator):
    if name == "posterize":
        return 8 - math.ceil(severity * 4 / 10)
    if name == "solarize":
        return 256 - math.ceil(severity * 25.6)
    if name in ("color", "contrast", "brightness", "sharpness"):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return 1.0 + sign * 0.09 * severity
    return None


@dataclass(frozen=True)
class CamPlan:
    mix_weight: float  # share of the original image in the final mix
    chain_weights: tuple[float, ...]
    chains: tuple[tuple[tuple[str, object], ...], ...]


def sample_cam_plan(cfg: CamConfig, rng: np.random.Generator) -> CamPlan:
    mix_weight = float(rng.beta(cfg.alpha, cfg.alpha))
    weights = tuple(float(w) for w in rng.dirichlet([cfg.alpha] * cfg.width))
    ops = cfg.ops
    chains = []
    for _ in range(cfg.width):
        depth = int(rng.integers(cfg.depth_range[0], cfg.depth_range[1] + 1))
        chain = []
        for _ in range(depth):
            name = ops[int(rng.integers(len(ops)))]
            chain.append((name, _op_severity_arg(name, cfg.severity, rng)))
        chains.append(tuple(chain))
    return CamPlan(mix_weight=mix_weight, chain_weights=weights, chains=tuple(chains))


def _apply_color_op(rgb: np.ndarray, name: str, arg) -> np.ndarray:
    pil = Image.fromarray(rgb, "RGB")
    if name == "autocontrast":
        out = ImageOps.autocontrast(pil)
    elif name == "equalize":
        out = ImageOps.equalize(pil)
    elif name == "posterize":
        out = ImageOps.posterize(pil, int(arg))
    elif name == "solarize":
        out = ImageOps.solarize(pil, int(arg))
    elif name == "color":
        out = ImageEnhance.Color(pil).enhance(float(arg))
    elif name == "contrast":
        out = ImageEnhance.Contrast(pil).enhance(float(arg))
    elif name == "brightness":
        out = ImageEnhance.Brightness(pil).enhance(float(arg))
    elif name == "sharpness":
        out = ImageEnhance.Sharpness(pil).enhance(float(arg))
    else:
        raise InvariantError(f"unknown chain op {name!r}")
    return np.asarray(out)


def apply_cam_plan(img: np.ndarray, plan: CamPlan) -> np.ndarray:
    """out = m * img + (1 - m) * sum_i w_i * chain_i(img), quantized once."""
    rgb = img[..., :3]
    mixed = np.zeros(rgb.shape, dtype=np.float64)
    for weight, chain in zip(plan.chain_weights, plan.chains):
        out = rgb
        for name, arg in chain:
            out = _apply_color_op(out, name, arg)
        mixed += weight * out.astype(np.float64)
    m = plan.mix_weight
    blended = quantize_u8(m * rgb.astype(np.float64) + (1.0 - m) * mixed)
    if img.shape[2] == 4:
        return np.concatenate([blended, img[..., 3:]], axis=-1)
    return blended


def cam(img: np.ndarray, cfg: CamConfig, rng: np.random.Generator) -> np.ndarray:
    """Chained augmentation mixing; the paired mask is never modified."""
    return apply_cam_plan(img, sample_cam_plan(cfg, rng))


# ---------------------------------------------------------------------------
# Coarse dropout

# A region is ("rect", x0, y0, x1, y1) or ("circle", cx, cy, radius).


def sample_cdo_regions(
    shape_hw: tuple[int, int], cfg: CdoConfig, rng: np.random.Generator
) -> list[tuple]:
    if rng.random() >= cfg.apply_prob:
        return []
    h, w = shape_hw
    regions = []
    count = int(rng.integers(cfg.num_range[0], cfg.num_range[1] + 1))
    for _ in range(count):
        shape = cfg.shapes[int(rng.integers(len(cfg.shapes)))]
        if shape == "rect":
            rw = max(1, round(float(rng.uniform(*cfg.size_range)) * w))
            rh = max(1, round(float(rng.uniform(*cfg.size_range)) * h))
            cx = int(rng.integers(w))
            cy = int(rng.integers(h))
            x0, x1 = max(cx - rw // 2, 0), min(cx + (rw + 1) // 2, w)
            y0, y1 = max(cy - rh // 2, 0), min(cy + (rh + 1) // 2, h)
            if x0 < x1 and y0 < y1:
                regions.append(("rect", x0, y0, x1, y1))
        else:
            radius = max(1.0, float(rng.uniform(*cfg.size_range)) * min(w, h) / 2.0)
            cx = int(rng.integers(w))
            cy = int(rng.integers(h))
            regions.append(("circle", cx, cy, radius))
    return regions


def apply_cdo_regions(
    img: np.ndarray, mask: np.ndarray, regions: list[tuple]
) -> tuple[np.ndarray, np.ndarray]:
    if not regions:
        return img, mask
    out_img = img.copy()
    out_mask = mask.copy()
    h, w = mask.shape
    for region in regions:
        if region[0] == "rect":
            _, x0, y0, x1, y1 = region
            out_img[y0:y1, x0:x1] = 0
            out_mask[y0:y1, x0:x1] = 0
        else:
            _, cx, cy, radius = region
            ys = np.arange(h)[:, None]
            xs = np.arange(w)[None, :]
            disk = (xs - cx) ** 2 + (ys - cy) ** 2 <= radius**2
            out_img[disk] = 0
            out_mask[disk] = 0
    return out_img, out_mask


def cdo(
    img: np.ndarray, mask: np.ndarray, cfg: CdoConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Zero random patches in image and mask simultaneously (with probability
    apply_prob); pixels outside the dropped regions are untouched."""
    ensure_mask(mask)
    if img.shape[:2] != mask.shape:
        raise InvariantError("image and mask dimensions must match")
    return apply_cdo_regions(img, mask, sample_cdo_regions(mask.shape, cfg, rng))


# ---------------------------------------------------------------------------
# Element-wise patch mixing


@dataclass(frozen=True)
class Exchange:
    target: int
    partner: int
    x0: int
    y0: int
    x1: int
    y1: int


def sample_epm_exchanges(
    size: int, shape_hw: tuple[int, int], cfg: EpmConfig, rng: np.random.Generator
) -> list[Exchange]:
    if size < 2 and cfg.prob > 0:
        raise InvariantError("patch mixing needs a batch of at least 2 elements")
    h, w = shape_hw
    exchanges = []
    for i in range(size):
        if rng.random() >= cfg.prob:
            continue
        j = int(rng.integers(size - 1))
        if j >= i:
            j += 1
        lam = float(rng.random())
        cut_w = round(w * math.sqrt(1.0 - lam))
        cut_h = round(h * math.sqrt(1.0 - lam))
        cx = int(rng.integers(w))
        cy = int(rng.integers(h))
        x0, x1 = max(cx - cut_w // 2, 0), min(cx + (cut_w + 1) // 2, w)
        y0, y1 = max(cy - cut_h // 2, 0), min(cy + (cut_h + 1) // 2, h)
        if x0 < x1 and y0 < y1:
            exchanges.append(Exchange(target=i, partner=j, x0=x0, y0=y0, x1=x1, y1=y1))
    return exchanges


def apply_epm_exchanges(batch: Batch, exchanges: list[Exchange]) -> Batch:
    """Paste the partner's image AND mask rectangle into each target element.

    Partner content always comes from the input batch, so every output pixel's
    (image, mask) pair originates jointly from exactly one source sample.
    """
    images = [img.copy() for img, _ in batch.pairs]
    masks = [mask.copy() for _, mask in batch.pairs]
    for ex in exchanges:
        src_img, src_mask = batch.pairs[ex.partner]
        images[ex.target][ex.y0 : ex.y1, ex.x0 : ex.x1] = src_img[ex.y0 : ex.y1, ex.x0 : ex.x1]
        masks[ex.target][ex.y0 : ex.y1, ex.x0 : ex.x1] = src_mask[ex.y0 : ex.y1, ex.x0 : ex.x1]
    return Batch(
        pairs=list(zip(images, masks)), epoch=batch.epoch, batch_index=batch.batch_index
    )


def epm(batch: Batch, cfg: EpmConfig, rng: np.random.Generator) -> Batch:
    """CutMix-style joint image/mask rectangle exchange per selected element."""
    shape_hw = batch.pairs[0][1].shape
    return apply_epm_exchanges(batch, sample_epm_exchanges(len(batch), shape_hw, cfg, rng))


# ---------------------------------------------------------------------------
# Hybrid pipeline

DEFAULT_ORDER = ("epm", "cam", "cdo")


def hybrid(
    batch: Batch,
    cam_cfg: CamConfig | None,
    cdo_cfg: CdoConfig | None,
    epm_cfg: EpmConfig | None,
    rng: np.random.Generator,
    order: tuple[str, ...] = DEFAULT_ORDER,
) -> Batch:
    """Apply the enabled operators in the given stage order.

    Passing None disables an operator; with all three disabled the input
    batch passes through bit-exactly. A single-element batch skips patch
    mixing (there is no partner to draw from).
    """
    if set(order) != {"epm", "cam", "cdo"}:
        raise ConfigError(f"hybrid order must permute ('epm', 'cam', 'cdo'), got {order}")
    out = batch
    for stage in order:
        if stage == "epm" and epm_cfg is not None and len(out) >= 2:
            out = epm(out, epm_cfg, rng)
        elif stage == "cam" and cam_cfg is not None:
            pairs = [(cam(img, cam_cfg, rng), mask) for img, mask in out.pairs]
            out = Batch(pairs=pairs, epoch=out.epoch, batch_index=out.batch_index)
        elif stage == "cdo" and cdo_cfg is not None:
            pairs = [cdo(img, mask, cdo_cfg, rng) for img, mask in out.pairs]
            out = Batch(pairs=pairs, epoch=out.epoch, batch_index=out.batch_index)
    return out


# ---------------------------------------------------------------------------
# Delivery: byte stream and offline PNG pairs


@dataclass(frozen=True)
class StreamConfig:
    batch_size: int
    epochs: int
    master_seed: int
    cam: CamConfig | None = field(default_factory=CamConfig)
    cdo: CdoConfig | None = field(default_factory=CdoConfig)
    epm: EpmConfig | None = field(default_factory=EpmConfig)
    order: tuple[str, ...] = DEFAULT_ORDER

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epm is not None and self.epm.prob > 0 and self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2 when patch mixing is enabled")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")


def iter_augmented_batches(
    manifest_path, cfg: StreamConfig
) -> Iterator[tuple[Batch, list[int]]]:
    """Yield augmented batches in deterministic order, with source sample ids.

    Per-epoch shuffling is seeded by (master_seed, epoch); per-batch
    augmentation by (master_seed, epoch, batch index).
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent
    samples = sorted(manifest["samples"], key=lambda s: s["id"])
    n = len(samples)
    for epoch in range(cfg.epochs):
        perm = derive_rng(cfg.master_seed, "epoch", epoch).permutation(n)
        for batch_index, start in enumerate(range(0, n, cfg.batch_size)):
            chosen = perm[start : start + cfg.batch_size]
            pairs = []
            ids = []
            for pos in chosen:
                sample = samples[int(pos)]
                img = load_png(base / sample["image"], "image")
                mask = load_png(base / sample["mask"], "mask")
                pairs.append((img, mask))
                ids.append(int(sample["id"]))
            batch = Batch(pairs=pairs, epoch=epoch, batch_index=batch_index)
            rng = derive_rng(cfg.master_seed, "augment", epoch, batch_index)
            yield hybrid(batch, cfg.cam, cfg.cdo, cfg.epm, rng, cfg.order), ids


def encode_batch(batch: Batch) -> bytes:
    """Serialize one batch: u32 epoch, u32 batch_index, u16 count, then per
    sample u16 w, u16 h, u8 channels, image bytes row-major, mask bytes."""
    parts = [struct.pack("<IIH", batch.epoch, batch.batch_index, len(batch))]
    for img, mask in batch.pairs:
        h, w = mask.shape
        parts.append(struct.pack("<HHB", w, h, img.shape[2]))
        parts.append(np.ascontiguousarray(img).tobytes())
        parts.append(np.ascontiguousarray(mask).tobytes())
    return b"".join(parts)


def stream_batches(manifest_path, cfg: StreamConfig, sink: BinaryIO) -> int:
    """Emit the magic then every augmented batch to the sink; returns the
    number of batches written. Two runs with the same seeds are byte-equal."""
    sink.write(STREAM_MAGIC)
    count = 0
    for batch, _ in iter_augmented_batches(manifest_path, cfg):
        sink.write(encode_batch(batch))
        count += 1
    sink.flush()
    return count


def write_augmented(manifest_path, cfg: StreamConfig, out_dir) -> dict:
    """Offline mode: write the exact pixels the stream would carry as PNG
    pairs under out_dir, plus a manifest recording their provenance."""
    out_dir = Path(out_dir)
    records = []
    running = 0
    for batch, ids in iter_augmented_batches(manifest_path, cfg):
        for (img, mask), source_id in zip(batch.pairs, ids):
            rec = {
                "id": running,
                "image": f"images/{running:06d}.png",
                "mask": f"masks/{running:06d}.png",
                "epoch": batch.epoch,
                "batch_index": batch.batch_index,
                "source_id": source_id,
            }
            save_png(img, out_dir / rec["image"])
            save_png(mask, out_dir / rec["mask"])
            records.append(rec)
            running += 1
    manifest = {
        "version": 1,
        "kind": "augmented",
        "source": str(manifest_path),
        "master_seed": cfg.master_seed,
        "samples": records,
    }
    write_manifest(manifest, out_dir / "manifest.json")
    return manifest

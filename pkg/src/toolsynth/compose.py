"""Scene composition and dataset emission.

A scene is one background pool entry with one or two placed, blended sprites
of distinct classes. Every sample is fully determined by (master_seed, index),
and its manifest record carries enough provenance (pool indices plus
placement parameters) to re-render the pair bit-exactly without re-running
any sampling.
"""

from __future__ import annotations

import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .augment import resample_image, resample_image_float, resample_mask
from .blend import DEFAULT_LEVELS, alpha_blend, gaussian_blend, laplacian_blend
from .errors import ConfigError, DataIOError, InvariantError
from .imgcore import mask_union, quantize_u8, save_png
from .pools import PoolSet, Sprite, load_pool_cache
from .rng import derive_rng

MANIFEST_VERSION = 1
BLEND_MODES = ("alpha", "gaussian", "laplacian")

#: Placement bounds: the sprite's longer side lands in this fraction range of
#: the canvas width, and at least this fraction of its mask stays on canvas.
SCALE_FRACTION = (0.4, 0.9)
MIN_VISIBLE_FRACTION = 0.25
MAX_PLACEMENT_ATTEMPTS = 50

#: Named recipes: seeds per instrument plus instruments-per-image distribution.
DATASET_PRESETS = {
    "s2-f1": (2, {1: 1.0}),
    "s2-f2": (2, {2: 1.0}),
    "s3-f1": (3, {1: 1.0}),
    "s3-f2": (3, {2: 1.0}),
    "s3-f1f2": (3, {1: 0.2, 2: 0.8}),
}


def round_half_away(x: float) -> int:
    """round(x) with halves going away from zero; the engine-wide rule for
    converting fractional counts to integers."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class Placement:
    scale: float
    rotation: float  # degrees
    dx: float  # sprite-center offset from canvas center, pixels
    dy: float
    z_order: int

    def to_json(self) -> dict:
        return {
            "scale": self.scale,
            "rot": self.rotation,
            "dx": self.dx,
            "dy": self.dy,
            "z": self.z_order,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Placement":
        return cls(
            scale=data["scale"],
            rotation=data["rot"],
            dx=data["dx"],
            dy=data["dy"],
            z_order=data["z"],
        )


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    seeds_per_instrument: int
    fg_distribution: dict[int, float]  # {1: p1, 2: p2}
    count: int
    blend_mode: str
    master_seed: int
    canvas: tuple[int, int] = (512, 512)
    levels: int = DEFAULT_LEVELS

    def __post_init__(self):
        if self.blend_mode not in BLEND_MODES:
            raise ConfigError(f"blend mode must be one of {BLEND_MODES}, got {self.blend_mode!r}")
        if self.count < 1:
            raise ConfigError(f"dataset count must be >= 1, got {self.count}")
        probs = self.fg_distribution
        if set(probs) - {1, 2} or any(p < 0 for p in probs.values()):
            raise ConfigError(f"fg_distribution must map {{1, 2}} to non-negative weights, got {probs}")
        if abs(sum(probs.values()) - 1.0) > 1e-9:
            raise ConfigError(f"fg_distribution probabilities must sum to 1, got {probs}")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "seeds_per_instrument": self.seeds_per_instrument,
            "fg_distribution": {str(k): v for k, v in sorted(self.fg_distribution.items())},
            "count": self.count,
            "blend_mode": self.blend_mode,
            "master_seed": self.master_seed,
            "canvas": list(self.canvas),
            "levels": self.levels,
        }

    @classmethod
    def from_json(cls, data: dict) -> "DatasetSpec":
        return cls(
            name=data["name"],
            seeds_per_instrument=int(data["seeds_per_instrument"]),
            fg_distribution={int(k): float(v) for k, v in data["fg_distribution"].items()},
            count=int(data["count"]),
            blend_mode=data["blend_mode"],
            master_seed=int(data["master_seed"]),
            canvas=tuple(data.get("canvas", (512, 512))),
            levels=int(data.get("levels", DEFAULT_LEVELS)),
        )


@dataclass
class ScenePair:
    image: np.ndarray
    mask: np.ndarray
    provenance: dict


# ---------------------------------------------------------------------------
# Placement and rendering


def _placement_inverse(placement: Placement, sprite_size, canvas_size) -> np.ndarray:
    """Output(canvas)->source(sprite) map for a scale/rotate/translate place."""
    sw, sh = sprite_size
    cw, ch = canvas_size
    theta = math.radians(placement.rotation)
    s = placement.scale
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    rs = np.array([[s * cos_t, -s * sin_t], [s * sin_t, s * cos_t]])
    sprite_center = np.array([(sw - 1) / 2.0, (sh - 1) / 2.0])
    target = np.array([(cw - 1) / 2.0 + placement.dx, (ch - 1) / 2.0 + placement.dy])
    forward = np.eye(3)
    forward[:2, :2] = rs
    forward[:2, 2] = target - rs @ sprite_center
    return np.linalg.inv(forward)


def _placement_window(
    placement: Placement, sprite_size, canvas_size
) -> tuple[int, int, int, int]:
    """Canvas bounding box (x0, y0, x1, y1) of the transformed sprite, clipped
    to the canvas, with a 2 px margin for nearest-neighbor rounding."""
    sw, sh = sprite_size
    cw, ch = canvas_size
    inv = _placement_inverse(placement, sprite_size, canvas_size)
    forward = np.linalg.inv(inv)
    corners = np.array(
        [[0, 0, 1], [sw - 1, 0, 1], [sw - 1, sh - 1, 1], [0, sh - 1, 1]], dtype=np.float64
    )
    mapped = corners @ forward.T
    xs, ys = mapped[:, 0], mapped[:, 1]
    x0 = max(int(np.floor(xs.min())) - 2, 0)
    y0 = max(int(np.floor(ys.min())) - 2, 0)
    x1 = min(int(np.ceil(xs.max())) + 3, cw)
    y1 = min(int(np.ceil(ys.max())) + 3, ch)
    return x0, y0, x1, y1


def _window_inverse(inv: np.ndarray, x0: int, y0: int) -> np.ndarray:
    offset = np.array([[1.0, 0.0, x0], [0.0, 1.0, y0], [0.0, 0.0, 1.0]])
    return inv @ offset


def placed_mask(
    sprite: Sprite, placement: Placement, canvas_size: tuple[int, int]
) -> np.ndarray:
    """The sprite mask warped onto the canvas (zero outside the sprite)."""
    sh, sw = sprite.mask.shape
    cw, ch = canvas_size
    out = np.zeros((ch, cw), dtype=np.uint8)
    x0, y0, x1, y1 = _placement_window(placement, (sw, sh), canvas_size)
    if x0 >= x1 or y0 >= y1:
        return out
    inv = _window_inverse(_placement_inverse(placement, (sw, sh), canvas_size), x0, y0)
    out[y0:y1, x0:x1] = resample_mask(sprite.mask, inv, (x1 - x0, y1 - y0))
    return out


def place_sprite(
    sprite: Sprite, placement: Placement, canvas_size: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    """Warp a sprite onto an empty canvas; returns (rgb, mask).

    RGB is premultiplied by the mask before warping and un-premultiplied
    after, so no out-of-sprite pixels bleed across the boundary; the returned
    rgb is only meaningful where mask == 1. Resampling runs on the
    transformed sprite's bounding window only.
    """
    sh, sw = sprite.mask.shape
    cw, ch = canvas_size
    rgb = np.zeros((ch, cw, 3), dtype=np.uint8)
    mask = np.zeros((ch, cw), dtype=np.uint8)
    x0, y0, x1, y1 = _placement_window(placement, (sw, sh), canvas_size)
    if x0 >= x1 or y0 >= y1:
        return rgb, mask
    inv = _window_inverse(_placement_inverse(placement, (sw, sh), canvas_size), x0, y0)
    window = (x1 - x0, y1 - y0)
    weight = sprite.mask.astype(np.float32)
    premult = sprite.image[..., :3].astype(np.float32) * weight[..., None]
    stacked = np.concatenate([premult, weight[..., None]], axis=-1)
    warped = resample_image_float(stacked, inv, window, mode="constant", cval=0.0)
    rgb[y0:y1, x0:x1] = quantize_u8(
        warped[..., :3] / np.maximum(warped[..., 3:], 1e-6)
    )
    mask[y0:y1, x0:x1] = resample_mask(sprite.mask, inv, window)
    return rgb, mask


def _transformed_mask_area(sprite: Sprite, placement: Placement) -> int:
    """Mask area after scale+rotation, measured on the sprite's own bounding
    frame (as if the canvas were unbounded)."""
    sh, sw = sprite.mask.shape
    s = placement.scale
    theta = math.radians(placement.rotation)
    bw = int(math.ceil(abs(math.cos(theta)) * sw * s + abs(math.sin(theta)) * sh * s)) + 2
    bh = int(math.ceil(abs(math.sin(theta)) * sw * s + abs(math.cos(theta)) * sh * s)) + 2
    centered = Placement(scale=s, rotation=placement.rotation, dx=0.0, dy=0.0, z_order=0)
    inv = _placement_inverse(centered, (sw, sh), (bw, bh))
    return int(resample_mask(sprite.mask, inv, (bw, bh)).sum())


def sample_placement(
    sprite: Sprite, canvas_size: tuple[int, int], rng: np.random.Generator, z_order: int = 0
) -> Placement:
    """Draw scale and rotation once, then rejection-sample a translation that
    keeps at least MIN_VISIBLE_FRACTION of the transformed mask on canvas."""
    if int(sprite.mask.sum()) == 0:
        raise InvariantError("cannot place a sprite with an empty mask")
    cw, ch = canvas_size
    sh, sw = sprite.mask.shape
    longer = max(sw, sh)
    scale = float(rng.uniform(*SCALE_FRACTION)) * cw / longer
    rotation = float(rng.uniform(-180.0, 180.0))
    probe = Placement(scale=scale, rotation=rotation, dx=0.0, dy=0.0, z_order=z_order)
    total = _transformed_mask_area(sprite, probe)
    for _ in range(MAX_PLACEMENT_ATTEMPTS):
        cx = float(rng.uniform(0, cw))
        cy = float(rng.uniform(0, ch))
        placement = Placement(
            scale=scale,
            rotation=rotation,
            dx=cx - (cw - 1) / 2.0,
            dy=cy - (ch - 1) / 2.0,
            z_order=z_order,
        )
        visible = int(placed_mask(sprite, placement, canvas_size).sum())
        if visible >= MIN_VISIBLE_FRACTION * total:
            return placement
    raise InvariantError(
        f"no placement kept >= {MIN_VISIBLE_FRACTION:.0%} of the sprite visible "
        f"after {MAX_PLACEMENT_ATTEMPTS} attempts"
    )


def _resize_to_canvas(img: np.ndarray, canvas_size: tuple[int, int]) -> np.ndarray:
    cw, ch = canvas_size
    h, w = img.shape[:2]
    if (w, h) == (cw, ch):
        return img
    inverse = np.array(
        [
            [w / cw, 0.0, 0.5 * w / cw - 0.5],
            [0.0, h / ch, 0.5 * h / ch - 0.5],
            [0.0, 0.0, 1.0],
        ]
    )
    return resample_image(img, inverse, canvas_size, mode="reflect")


def _mask_window(
    mask: np.ndarray, margin: int, align: int
) -> tuple[int, int, int, int] | None:
    """Bounding box of the mask's support, padded by margin, clipped to the
    array, with bounds snapped outward to multiples of `align` so a windowed
    pyramid decimates on the same grid as a full-frame one."""
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return None
    h, w = mask.shape
    x0 = max(int(cols[0]) - margin, 0) // align * align
    y0 = max(int(rows[0]) - margin, 0) // align * align
    x1 = min(-(-(int(cols[-1]) + margin + 1) // align) * align, w)
    y1 = min(-(-(int(rows[-1]) + margin + 1) // align) * align, h)
    return x0, y0, x1, y1


def render_scene(
    bg: np.ndarray,
    sprites: list[Sprite],
    placements: list[Placement],
    mode: str,
    canvas_size: tuple[int, int],
    levels: int = DEFAULT_LEVELS,
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministically render placed sprites over a background.

    Sprites blend sequentially in z order; each later sprite blends against
    the current composite. The scene mask is the union of all placed masks.
    Laplacian blending runs on a window padded well beyond the pyramid's
    influence radius around the sprite: outside it the reconstruction
    identity returns the background unchanged, so the windowed result
    matches a full-canvas blend.
    """
    composite = _resize_to_canvas(bg[..., :3], canvas_size)
    scene_mask = np.zeros((canvas_size[1], canvas_size[0]), dtype=np.uint8)
    order = np.argsort([p.z_order for p in placements], kind="stable")
    for idx in order:
        sprite, placement = sprites[idx], placements[idx]
        rgb, pmask = place_sprite(sprite, placement, canvas_size)
        fg_canvas = np.where(pmask[..., None] == 1, rgb, composite)
        if mode == "alpha":
            composite = alpha_blend(fg_canvas, composite, pmask)
        elif mode == "gaussian":
            composite, _ = gaussian_blend(fg_canvas, composite, pmask)
        elif mode == "laplacian":
            window = _mask_window(pmask, margin=5 * 2**levels, align=2 ** (levels - 1))
            if window is not None:
                x0, y0, x1, y1 = window
                blended = laplacian_blend(
                    fg_canvas[y0:y1, x0:x1],
                    composite[y0:y1, x0:x1],
                    pmask[y0:y1, x0:x1],
                    levels,
                )
                composite = composite.copy()
                composite[y0:y1, x0:x1] = blended
        else:
            raise InvariantError(f"unknown blend mode {mode!r}")
        scene_mask = mask_union(scene_mask, pmask)
    return composite, scene_mask


def compose_scene(
    bg: np.ndarray,
    sprites: list[Sprite],
    mode: str,
    rng: np.random.Generator,
    canvas_size: tuple[int, int] | None = None,
    levels: int = DEFAULT_LEVELS,
) -> ScenePair:
    """Place one or two sprites of distinct classes on a background and blend."""
    if not 1 <= len(sprites) <= 2:
        raise InvariantError(f"a scene takes 1 or 2 sprites, got {len(sprites)}")
    class_ids = [s.class_id for s in sprites]
    if len(set(class_ids)) != len(class_ids):
        raise InvariantError(f"scene sprites must have distinct classes, got {class_ids}")
    if canvas_size is None:
        canvas_size = (bg.shape[1], bg.shape[0])
    placements = [
        sample_placement(sprite, canvas_size, rng, z_order=z)
        for z, sprite in enumerate(sprites)
    ]
    image, mask = render_scene(bg, sprites, placements, mode, canvas_size, levels)
    provenance = {
        "sprites": [
            {"class": s.class_id, "placement": p.to_json()}
            for s, p in zip(sprites, placements)
        ],
        "blend": mode,
    }
    return ScenePair(image=image, mask=mask, provenance=provenance)


# ---------------------------------------------------------------------------
# Dataset generation


def instruments_per_sample(spec: DatasetSpec) -> np.ndarray:
    """Deterministic per-sample instrument counts honoring the distribution
    exactly: round_half_away(p1 * k) singles, the rest doubles, shuffled by a
    seed-derived permutation."""
    p1 = spec.fg_distribution.get(1, 0.0)
    n1 = round_half_away(p1 * spec.count)
    counts = np.array([1] * n1 + [2] * (spec.count - n1), dtype=np.int64)
    return derive_rng(spec.master_seed, "fg_count").permutation(counts)


def plan_sample(spec: DatasetSpec, pools: PoolSet, index: int, n_fg: int) -> dict:
    """Sample one manifest record (pure function of seed, spec, and index)."""
    rng = derive_rng(spec.master_seed, "sample", index)
    bg_index = int(rng.integers(len(pools.backgrounds)))
    class_ids = rng.choice(len(pools.class_names), size=n_fg, replace=False)
    sprites = []
    for z, class_id in enumerate(int(c) for c in class_ids):
        pool = pools.foregrounds[class_id]
        sprite_index = int(rng.integers(len(pool)))
        placement = sample_placement(pool[sprite_index], spec.canvas, rng, z_order=z)
        sprites.append(
            {
                "class": pools.class_names[class_id],
                "index": sprite_index,
                "placement": placement.to_json(),
            }
        )
    return {
        "id": index,
        "image": f"images/{index:06d}.png",
        "mask": f"masks/{index:06d}.png",
        "background": {
            "index": bg_index,
            "chain_seed": pools.background_records[bg_index].derivation_seed,
        },
        "sprites": sprites,
        "blend": spec.blend_mode,
    }


def render_sample(
    spec: DatasetSpec, pools: PoolSet, record: dict, _bg_cache: dict | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Re-render a manifest record from provenance alone.

    _bg_cache, when passed, memoizes canvas-resized backgrounds across calls
    (pure speedup; results are identical with or without it).
    """
    name_to_id = {name: i for i, name in enumerate(pools.class_names)}
    sprites = []
    placements = []
    for entry in record["sprites"]:
        class_id = name_to_id[entry["class"]]
        sprites.append(pools.foregrounds[class_id][entry["index"]])
        placements.append(Placement.from_json(entry["placement"]))
    bg_index = record["background"]["index"]
    if _bg_cache is not None:
        bg = _bg_cache.get(bg_index)
        if bg is None:
            bg = _resize_to_canvas(pools.backgrounds[bg_index][..., :3], spec.canvas)
            _bg_cache[bg_index] = bg
    else:
        bg = pools.backgrounds[bg_index]
    return render_scene(bg, sprites, placements, record["blend"], spec.canvas, spec.levels)


def _emit_range(spec_json, pool_dir, out_dir, ids_and_counts):
    spec = DatasetSpec.from_json(spec_json)
    pools = _worker_pools(str(pool_dir))
    cache = _BG_CACHE.setdefault(str(pool_dir), {})
    records = []
    for index, n_fg in ids_and_counts:
        record = plan_sample(spec, pools, index, n_fg)
        image, mask = render_sample(spec, pools, record, _bg_cache=cache)
        save_png(image, Path(out_dir) / record["image"])
        save_png(mask, Path(out_dir) / record["mask"])
        records.append(record)
    return records


_POOL_CACHE: dict[str, PoolSet] = {}
_BG_CACHE: dict[str, dict] = {}


def _worker_pools(pool_dir: str) -> PoolSet:
    pools = _POOL_CACHE.get(pool_dir)
    if pools is None:
        pools = load_pool_cache(pool_dir)
        _POOL_CACHE[pool_dir] = pools
    return pools


def generate_dataset(
    spec: DatasetSpec,
    pools: PoolSet,
    out_dir,
    jobs: int = 1,
    pool_dir=None,
) -> dict:
    """Emit count image/mask PNG pairs plus a manifest under out_dir.

    The output is a pure function of (spec, pools): reruns and any worker
    count produce byte-identical directories. With jobs != 1 workers re-read
    the pools from pool_dir (written to a temp dir when not supplied) instead
    of shipping arrays through task pickles.
    """
    if spec.seeds_per_instrument != pools.seeds_per_class:
        raise ConfigError(
            f"spec wants {spec.seeds_per_instrument} seeds per instrument but the "
            f"pools were built with {pools.seeds_per_class}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts = instruments_per_sample(spec)

    if jobs == 1:
        records = []
        bg_cache: dict = {}
        for index in range(spec.count):
            record = plan_sample(spec, pools, index, int(counts[index]))
            image, mask = render_sample(spec, pools, record, _bg_cache=bg_cache)
            save_png(image, out_dir / record["image"])
            save_png(mask, out_dir / record["mask"])
            records.append(record)
    else:
        tmp = None
        if pool_dir is None:
            from .pools import save_pool_cache

            tmp = tempfile.mkdtemp(prefix="toolsynth-pools-")
            save_pool_cache(pools, tmp)
            pool_dir = tmp
        try:
            chunk = 32
            tasks = [
                [(i, int(counts[i])) for i in range(start, min(start + chunk, spec.count))]
                for start in range(0, spec.count, chunk)
            ]
            results = Parallel(n_jobs=jobs)(
                delayed(_emit_range)(spec.to_json(), str(pool_dir), str(out_dir), task)
                for task in tasks
            )
            records = [r for batch in results for r in batch]
        finally:
            if tmp is not None:
                shutil.rmtree(tmp, ignore_errors=True)

    records.sort(key=lambda r: r["id"])
    manifest = {
        "version": MANIFEST_VERSION,
        "kind": "synthetic",
        "spec": {**spec.to_json(), "classes": list(pools.class_names)},
        "master_seed": spec.master_seed,
        "samples": records,
    }
    write_manifest(manifest, out_dir / "manifest.json")
    return manifest


# ---------------------------------------------------------------------------
# Manifest I/O (versioned; unknown fields rejected)

_TOP_KEYS = {
    "synthetic": {"version", "kind", "spec", "master_seed", "samples"},
    "mix": {"version", "kind", "recipe", "seed", "samples"},
    "augmented": {"version", "kind", "source", "master_seed", "samples"},
}
_SAMPLE_KEYS = {
    "synthetic": {"id", "image", "mask", "background", "sprites", "blend"},
    "mix": {"id", "image", "mask", "origin"},
    "augmented": {"id", "image", "mask", "epoch", "batch_index", "source_id"},
}


def write_manifest(manifest: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load_manifest(path) -> dict:
    """Read and strictly validate a manifest; raises on unknown fields."""
    path = Path(path)
    if not path.is_file():
        raise DataIOError(f"{path}: manifest not found")
    with open(path) as fh:
        manifest = json.load(fh)
    version = manifest.get("version")
    if version != MANIFEST_VERSION:
        raise DataIOError(f"{path}: unsupported manifest version {version!r}")
    kind = manifest.get("kind", "synthetic")
    if kind not in _TOP_KEYS:
        raise DataIOError(f"{path}: unknown manifest kind {kind!r}")
    unknown = set(manifest) - _TOP_KEYS[kind]
    if unknown:
        raise DataIOError(f"{path}: unknown manifest fields {sorted(unknown)}")
    missing = _TOP_KEYS[kind] - set(manifest)
    if missing:
        raise DataIOError(f"{path}: missing manifest fields {sorted(missing)}")
    for sample in manifest["samples"]:
        bad = set(sample) - _SAMPLE_KEYS[kind]
        if bad:
            raise DataIOError(
                f"{path}: sample {sample.get('id')} has unknown fields {sorted(bad)}"
            )
    return manifest


# ---------------------------------------------------------------------------
# Synthetic-real mixing


@dataclass(frozen=True)
class MixRecipe:
    """Replace swaps a seeded fraction of synthetics for real pairs (size
    stays k); Augment appends a fraction's worth of real pairs on top."""

    mode: str  # "replace" | "augment"
    fraction: float
    rounding: str = "half_away"  # "half_away" | "truncate"

    def __post_init__(self):
        if self.mode not in ("replace", "augment"):
            raise ConfigError(f"mix mode must be 'replace' or 'augment', got {self.mode!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ConfigError(f"mix fraction must be in [0, 1], got {self.fraction}")
        if self.rounding not in ("half_away", "truncate"):
            raise ConfigError(f"mix rounding must be 'half_away' or 'truncate', got {self.rounding!r}")

    def real_count(self, k: int) -> int:
        x = self.fraction * k
        return round_half_away(x) if self.rounding == "half_away" else int(x)


def _list_real_pairs(real_dir: Path) -> list[tuple[Path, Path]]:
    images = sorted((real_dir / "images").glob("*.png"))
    pairs = []
    missing = []
    for img in images:
        mask = real_dir / "masks" / img.name
        if mask.is_file():
            pairs.append((img, mask))
        else:
            missing.append(img.name)
    if missing:
        raise DataIOError(f"{real_dir}: images without masks: {missing[:5]}")
    return pairs


def mix_datasets(
    synthetic_manifest_path,
    real_dir,
    recipe: MixRecipe,
    seed: int,
    out_path,
) -> dict:
    """Blend a synthetic manifest with real image/mask pairs into a mix
    manifest referencing both (paths relative to the output manifest)."""
    synthetic_manifest_path = Path(synthetic_manifest_path)
    out_path = Path(out_path)
    real_dir = Path(real_dir)
    manifest = load_manifest(synthetic_manifest_path)
    syn_base = synthetic_manifest_path.parent
    out_base = out_path.parent.resolve()
    out_base.mkdir(parents=True, exist_ok=True)

    k = len(manifest["samples"])
    r = recipe.real_count(k)
    real_pairs = _list_real_pairs(real_dir)
    if r > len(real_pairs):
        raise ConfigError(
            f"recipe needs {r} real samples but {real_dir} holds only {len(real_pairs)}"
        )
    rng = derive_rng(seed, "mix", recipe.mode)
    real_chosen = sorted(int(i) for i in rng.choice(len(real_pairs), size=r, replace=False))

    def rel(p: Path) -> str:
        return os.path.relpath(str(p.resolve()), str(out_base))

    entries = []
    if recipe.mode == "replace":
        replaced = set(
            int(i) for i in rng.choice(k, size=r, replace=False)
        )
        real_iter = iter(real_chosen)
        for pos, sample in enumerate(manifest["samples"]):
            if pos in replaced:
                img, mask = real_pairs[next(real_iter)]
                entries.append({"image": rel(img), "mask": rel(mask), "origin": "real"})
            else:
                entries.append(
                    {
                        "image": rel(syn_base / sample["image"]),
                        "mask": rel(syn_base / sample["mask"]),
                        "origin": "synthetic",
                    }
                )
    else:
        for sample in manifest["samples"]:
            entries.append(
                {
                    "image": rel(syn_base / sample["image"]),
                    "mask": rel(syn_base / sample["mask"]),
                    "origin": "synthetic",
                }
            )
        for i in real_chosen:
            img, mask = real_pairs[i]
            entries.append({"image": rel(img), "mask": rel(mask), "origin": "real"})

    samples = [{"id": i, **entry} for i, entry in enumerate(entries)]
    mixed = {
        "version": MANIFEST_VERSION,
        "kind": "mix",
        "recipe": {"mode": recipe.mode, "fraction": recipe.fraction, "rounding": recipe.rounding},
        "seed": seed,
        "samples": samples,
    }
    write_manifest(mixed, out_path)
    return mixed

"""Construction of the background and per-class foreground image pools.

Starting from one background seed image and one to three RGBA sprite seeds
per instrument class, the pools hold m (background) and n (per class,
foreground) augmented variants together with their chain records. Pool entry
i depends only on (master_seed, pool kind, i), never on worker count or
generation order, so pools are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .augment import (
    DEFAULT_RANGES,
    AugmentRanges,
    TransformChainRecord,
    apply_chain,
    sample_chain,
)
from .errors import ConfigError, DataIOError, InvariantError
from .imgcore import load_png, mask_area, save_png
from .rng import derive_rng, derive_seed

#: Default instrument class roster (eight classes).
DEFAULT_CLASS_NAMES = (
    "fenestrated_bipolar_forceps",
    "maryland_bipolar_forceps",
    "prograsp_forceps",
    "large_needle_driver",
    "monopolar_curved_scissors",
    "ultrasound_probe",
    "suction_instrument",
    "clip_applier",
)

#: A transformed sprite keeping less than this fraction of its original mask
#: area is rejected and its chain resampled.
MIN_AREA_FRACTION = 0.01
MAX_RESAMPLE_ATTEMPTS = 20


@dataclass(frozen=True)
class Sprite:
    """Foreground instrument cutout: RGBA image, aligned binary mask, class id.

    The alpha channel is kept in lockstep with the mask (alpha = mask * 255),
    so mask == 1 exactly where alpha > 0.
    """

    image: np.ndarray  # (H, W, 4) uint8
    mask: np.ndarray  # (H, W) uint8 in {0, 1}
    class_id: int
    seed_index: int = 0
    chain: TransformChainRecord | None = None


@dataclass(frozen=True)
class PoolSet:
    backgrounds: tuple[np.ndarray, ...]
    background_records: tuple[TransformChainRecord, ...]
    foregrounds: dict[int, tuple[Sprite, ...]]
    class_names: tuple[str, ...]
    seeds_per_class: int
    master_seed: int


def sprite_from_rgba(
    rgba: np.ndarray, class_id: int, seed_index: int = 0, source: str = "sprite"
) -> Sprite:
    """Build a seed sprite from an RGBA image, deriving the mask from alpha."""
    if rgba.ndim != 3 or rgba.shape[2] != 4:
        raise InvariantError(f"{source}: sprite seeds must be RGBA with transparency")
    mask = (rgba[..., 3] >= 128).astype(np.uint8)
    if mask_area(mask) == 0:
        raise InvariantError(f"{source}: sprite seed has an empty mask")
    image = rgba.copy()
    image[..., 3] = mask * 255
    return Sprite(image=image, mask=mask, class_id=class_id, seed_index=seed_index)


def _build_background(seed_image, master_seed, ranges, index):
    chain_seed = derive_seed(master_seed, "background", index)
    record = sample_chain(chain_seed, "background", ranges, source_seed_index=0)
    img, _ = apply_chain(seed_image, None, record)
    return img, record


def build_background_pool(
    seed_image: np.ndarray,
    m: int,
    master_seed: int,
    ranges: AugmentRanges = DEFAULT_RANGES,
    jobs: int = 1,
) -> tuple[tuple[np.ndarray, ...], tuple[TransformChainRecord, ...]]:
    """m augmented variants of the single background seed, with chain records."""
    if m < 1:
        raise InvariantError(f"background pool size must be >= 1, got {m}")
    results = Parallel(n_jobs=jobs)(
        delayed(_build_background)(seed_image, master_seed, ranges, i) for i in range(m)
    )
    images, records = zip(*results)
    return tuple(images), tuple(records)


def _build_fg_sprite(seeds, class_id, master_seed, ranges, index):
    rng = derive_rng(master_seed, "foreground", class_id, index)
    seed_index = int(rng.integers(len(seeds)))
    seed = seeds[seed_index]
    min_area = max(1, int(np.ceil(MIN_AREA_FRACTION * mask_area(seed.mask))))
    for attempt in range(MAX_RESAMPLE_ATTEMPTS):
        chain_seed = derive_seed(master_seed, "foreground", class_id, index, attempt)
        record = sample_chain(chain_seed, "foreground", ranges, source_seed_index=seed_index)
        img, msk = apply_chain(seed.image, seed.mask, record)
        if mask_area(msk) >= min_area:
            img = img.copy()
            img[..., 3] = msk * 255
            return Sprite(
                image=img, mask=msk, class_id=class_id, seed_index=seed_index, chain=record
            )
    raise InvariantError(
        f"class {class_id} sprite {index}: no chain kept >= {MIN_AREA_FRACTION:.0%} "
        f"of the seed mask after {MAX_RESAMPLE_ATTEMPTS} attempts"
    )


def build_foreground_pools(
    seed_sprites: dict[int, list[Sprite]],
    n: int,
    master_seed: int,
    ranges: AugmentRanges = DEFAULT_RANGES,
    jobs: int = 1,
) -> dict[int, tuple[Sprite, ...]]:
    """n augmented sprites per class; geometric transforms hit image and mask
    jointly, so every output carries an accurate derived annotation."""
    if n < 1:
        raise InvariantError(f"foreground pool size must be >= 1, got {n}")
    for class_id, seeds in seed_sprites.items():
        if len(seeds) == 0:
            raise InvariantError(f"class {class_id} has no seed sprites")
    pools: dict[int, tuple[Sprite, ...]] = {}
    for class_id in sorted(seed_sprites):
        seeds = seed_sprites[class_id]
        sprites = Parallel(n_jobs=jobs)(
            delayed(_build_fg_sprite)(seeds, class_id, master_seed, ranges, i)
            for i in range(n)
        )
        pools[class_id] = tuple(sprites)
    return pools


def build_pools(
    background_seed: np.ndarray,
    seed_sprites: dict[int, list[Sprite]],
    m: int,
    n: int,
    master_seed: int,
    class_names: tuple[str, ...] = DEFAULT_CLASS_NAMES,
    seeds_per_class: int | None = None,
    ranges: AugmentRanges = DEFAULT_RANGES,
    jobs: int = 1,
) -> PoolSet:
    backgrounds, records = build_background_pool(background_seed, m, master_seed, ranges, jobs)
    foregrounds = build_foreground_pools(seed_sprites, n, master_seed, ranges, jobs)
    if seeds_per_class is None:
        seeds_per_class = max(len(s) for s in seed_sprites.values())
    return PoolSet(
        backgrounds=backgrounds,
        background_records=records,
        foregrounds=foregrounds,
        class_names=tuple(class_names),
        seeds_per_class=seeds_per_class,
        master_seed=master_seed,
    )


# ---------------------------------------------------------------------------
# Seed directory and pool cache I/O


def load_seed_dir(
    seeds_dir,
    class_names: tuple[str, ...] = DEFAULT_CLASS_NAMES,
    seeds_per_class: int | None = None,
) -> tuple[np.ndarray, dict[int, list[Sprite]]]:
    """Read seeds/background.png plus seeds/<class_name>/<k>.png sprite seeds.

    With seeds_per_class set (2 or 3), every class must supply exactly that
    many sprites; otherwise 1-3 are accepted.
    """
    seeds_dir = Path(seeds_dir)
    bg_path = seeds_dir / "background.png"
    background = load_png(bg_path, "image")
    if background.shape[2] == 4:
        background = background[..., :3].copy()
    seed_sprites: dict[int, list[Sprite]] = {}
    for class_id, name in enumerate(class_names):
        class_dir = seeds_dir / name
        if not class_dir.is_dir():
            raise ConfigError(f"seed directory for class {name!r} missing: {class_dir}")
        paths = sorted(class_dir.glob("*.png"))
        if seeds_per_class is not None and len(paths) != seeds_per_class:
            raise ConfigError(
                f"class {name!r} has {len(paths)} seed images, expected {seeds_per_class}"
            )
        if not 1 <= len(paths) <= 3:
            raise ConfigError(
                f"class {name!r} has {len(paths)} seed images, expected 1 to 3"
            )
        sprites = []
        for k, p in enumerate(paths):
            rgba = load_png(p, "image")
            sprites.append(sprite_from_rgba(rgba, class_id, seed_index=k, source=str(p)))
        seed_sprites[class_id] = sprites
    return background, seed_sprites


def save_pool_cache(pools: PoolSet, pool_dir) -> None:
    """Write pool PNGs plus one records file; rerunning is byte-idempotent."""
    pool_dir = Path(pool_dir)
    for i, img in enumerate(pools.backgrounds):
        save_png(img, pool_dir / "background" / f"{i:05d}.png")
    for class_id, sprites in sorted(pools.foregrounds.items()):
        name = pools.class_names[class_id]
        for i, sprite in enumerate(sprites):
            save_png(sprite.image, pool_dir / "foreground" / name / f"{i:05d}.png")
    meta = {
        "version": 1,
        "master_seed": pools.master_seed,
        "m": len(pools.backgrounds),
        "n": {pools.class_names[c]: len(s) for c, s in sorted(pools.foregrounds.items())},
        "class_names": list(pools.class_names),
        "seeds_per_class": pools.seeds_per_class,
        "background_records": [r.to_json() for r in pools.background_records],
        "foreground_records": {
            pools.class_names[c]: [s.chain.to_json() for s in sprites]
            for c, sprites in sorted(pools.foregrounds.items())
        },
    }
    with open(pool_dir / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_pool_cache(pool_dir) -> PoolSet:
    pool_dir = Path(pool_dir)
    meta_path = pool_dir / "meta.json"
    if not meta_path.is_file():
        raise DataIOError(f"{meta_path}: pool cache metadata not found")
    with open(meta_path) as fh:
        meta = json.load(fh)
    if meta.get("version") != 1:
        raise DataIOError(f"{meta_path}: unsupported pool cache version {meta.get('version')}")
    class_names = tuple(meta["class_names"])
    backgrounds = tuple(
        load_png(pool_dir / "background" / f"{i:05d}.png", "image") for i in range(meta["m"])
    )
    records = tuple(
        TransformChainRecord.from_json(r) for r in meta["background_records"]
    )
    foregrounds: dict[int, tuple[Sprite, ...]] = {}
    for class_id, name in enumerate(class_names):
        count = meta["n"][name]
        chain_records = meta["foreground_records"][name]
        sprites = []
        for i in range(count):
            rgba = load_png(pool_dir / "foreground" / name / f"{i:05d}.png", "image")
            mask = (rgba[..., 3] >= 128).astype(np.uint8)
            record = TransformChainRecord.from_json(chain_records[i])
            sprites.append(
                Sprite(
                    image=rgba,
                    mask=mask,
                    class_id=class_id,
                    seed_index=record.source_seed_index,
                    chain=record,
                )
            )
        foregrounds[class_id] = tuple(sprites)
    return PoolSet(
        backgrounds=backgrounds,
        background_records=records,
        foregrounds=foregrounds,
        class_names=class_names,
        seeds_per_class=meta["seeds_per_class"],
        master_seed=meta["master_seed"],
    )

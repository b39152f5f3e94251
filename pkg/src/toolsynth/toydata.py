"""Procedural seed images for demos and tests.

Real deployments extract the seeds from endoscopic frames; these factories
make structurally similar stand-ins (a reddish tissue-like background, and
grey metallic instrument-like sprites with open or closed jaws) so the whole
pipeline can run end to end without any external data.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imgcore import save_png
from .pools import DEFAULT_CLASS_NAMES
from .rng import derive_rng


def toy_background(width: int = 256, height: int = 256, seed: int = 0) -> np.ndarray:
    """Smooth tissue-like RGB background with blotches and vignetting."""
    rng = derive_rng(seed, "toy_background")
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    base = np.zeros((height, width))
    for _ in range(6):
        fx, fy = rng.uniform(0.5, 3.0, size=2)
        phase_x, phase_y = rng.uniform(0, 2 * np.pi, size=2)
        base += rng.uniform(0.3, 1.0) * np.sin(
            2 * np.pi * fx * xx / width + phase_x
        ) * np.sin(2 * np.pi * fy * yy / height + phase_y)
    for _ in range(8):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        radius = rng.uniform(0.1, 0.35) * min(width, height)
        base += rng.uniform(-0.8, 0.8) * np.exp(
            -(((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * radius**2))
        )
    base = (base - base.min()) / (base.max() - base.min() + 1e-9)
    r = 120 + 100 * base
    g = 35 + 55 * base
    b = 40 + 45 * base
    return np.clip(np.stack([r, g, b], axis=-1), 0, 255).astype(np.uint8)


def toy_sprite(
    width: int = 140,
    height: int = 90,
    seed: int = 0,
    jaw_open: bool = False,
    body: tuple[int, int, int] = (185, 190, 200),
) -> np.ndarray:
    """Instrument-like RGBA sprite: a shaft ending in a jaw, on transparency."""
    rng = derive_rng(seed, "toy_sprite")
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    cy = height / 2 + rng.uniform(-height * 0.08, height * 0.08)
    shaft_half = height * rng.uniform(0.08, 0.14)
    tip_x = width * rng.uniform(0.18, 0.30)
    shaft = (np.abs(yy - cy) < shaft_half) & (xx > tip_x)
    if jaw_open:
        spread = rng.uniform(0.5, 0.9)
        upper = (
            (np.abs(yy - (cy - (tip_x - xx) * spread)) < shaft_half * 0.8)
            & (xx <= tip_x)
            & (xx > tip_x - width * 0.18)
        )
        lower = (
            (np.abs(yy - (cy + (tip_x - xx) * spread)) < shaft_half * 0.8)
            & (xx <= tip_x)
            & (xx > tip_x - width * 0.18)
        )
        jaws = upper | lower
    else:
        jaws = (
            ((xx - tip_x) ** 2 / (width * 0.12) ** 2 + (yy - cy) ** 2 / (height * 0.22) ** 2)
            <= 1.0
        )
    mask = shaft | jaws
    # metallic shading along the shaft
    shade = 0.75 + 0.25 * np.cos((yy - cy) / max(shaft_half, 1.0) * 1.4)
    img = np.zeros((height, width, 4), dtype=np.uint8)
    for c, value in enumerate(body):
        img[..., c][mask] = np.clip(value * shade[mask] + rng.uniform(-12, 12), 0, 255).astype(
            np.uint8
        )
    img[..., 3][mask] = 255
    return img


def write_toy_seed_dir(
    seeds_dir,
    class_names: tuple[str, ...] = DEFAULT_CLASS_NAMES,
    seeds_per_class: int = 3,
    background_size: tuple[int, int] = (256, 256),
    sprite_size: tuple[int, int] = (140, 90),
    seed: int = 0,
) -> Path:
    """Write a complete seeds/ directory (background.png plus per-class RGBA
    sprites) and return its path."""
    seeds_dir = Path(seeds_dir)
    bw, bh = background_size
    save_png(toy_background(bw, bh, seed=seed), seeds_dir / "background.png")
    sw, sh = sprite_size
    for class_id, name in enumerate(class_names):
        tone = 160 + 12 * (class_id % 5)
        for k in range(seeds_per_class):
            sprite = toy_sprite(
                sw,
                sh,
                seed=seed + class_id * 101 + k,
                jaw_open=(k % 2 == 1),
                body=(tone, tone + 8, min(tone + 25, 255)),
            )
            save_png(sprite, seeds_dir / name / f"{k}.png")
    return seeds_dir

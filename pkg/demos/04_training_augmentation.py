"""Demonstrate the training-time batch operators and the hybrid pipeline.

Chain mixing (cam) recolors without ever touching masks; coarse dropout
(cdo) zeroes patches in image and mask together; patch mixing (epm) swaps
rectangles between batch elements, masks included. The hybrid pipeline runs
epm, then cam, then cdo.

Run: python demos/04_training_augmentation.py
Outputs land in demos/output/04/.
"""

from pathlib import Path

import numpy as np

from toolsynth import toydata
from toolsynth.compose import DatasetSpec, generate_dataset
from toolsynth.imgcore import load_png, save_png
from toolsynth.pools import build_pools, load_seed_dir
from toolsynth.rng import derive_rng
from toolsynth.trainaug import Batch, CamConfig, CdoConfig, EpmConfig, cam, cdo, hybrid

OUT = Path(__file__).parent / "output" / "04"


def strip(pairs, pad=4):
    """Images on top, masks (as gray) below, side by side."""
    h, w = pairs[0][0].shape[:2]
    cols = len(pairs)
    sheet = np.full((2 * h + 3 * pad, cols * (w + pad) + pad, 3), 28, np.uint8)
    for i, (img, mask) in enumerate(pairs):
        x = pad + i * (w + pad)
        sheet[pad : pad + h, x : x + w] = img
        gray = (mask * 255).astype(np.uint8)
        sheet[2 * pad + h : 2 * pad + 2 * h, x : x + w] = gray[..., None]
    return sheet


def main():
    seeds_dir = toydata.write_toy_seed_dir(OUT / "seeds", seeds_per_class=3, seed=31)
    background, seed_sprites = load_seed_dir(seeds_dir, seeds_per_class=3)
    pools = build_pools(background, seed_sprites, m=6, n=6, master_seed=8, seeds_per_class=3)
    spec = DatasetSpec(
        name="demo-aug",
        seeds_per_instrument=3,
        fg_distribution={2: 1.0},
        count=4,
        blend_mode="laplacian",
        master_seed=8,
        canvas=(192, 192),
    )
    manifest = generate_dataset(spec, pools, OUT / "dataset")
    pairs = [
        (
            load_png(OUT / "dataset" / s["image"], "image"),
            load_png(OUT / "dataset" / s["mask"], "mask"),
        )
        for s in manifest["samples"]
    ]
    batch = Batch(pairs=pairs)
    save_png(strip(batch.pairs), OUT / "original.png")

    rng = derive_rng(8, "demo")
    cam_pairs = [(cam(img, CamConfig(op_set="hard"), rng), mask) for img, mask in batch.pairs]
    save_png(strip(cam_pairs), OUT / "cam_only.png")

    cdo_pairs = [cdo(img, mask, CdoConfig(apply_prob=1.0), rng) for img, mask in batch.pairs]
    save_png(strip(cdo_pairs), OUT / "cdo_only.png")

    full = hybrid(batch, CamConfig(op_set="hard"), CdoConfig(), EpmConfig(prob=1.0), rng)
    save_png(strip(full.pairs), OUT / "hybrid.png")
    print(f"wrote augmentation strips to {OUT}")
    print("note: cam strips leave every mask row identical to the original")


if __name__ == "__main__":
    main()

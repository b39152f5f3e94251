"""Build the source image pools from seed images and render contact sheets.

One background seed and three sprite seeds per instrument class go in;
out come m background variants and n sprites per class, each carrying a
chain record that replays its transform sequence bit-exactly.

Run: python demos/01_source_pools.py
Outputs land in demos/output/01/.
"""

from pathlib import Path

import numpy as np

from toolsynth import toydata
from toolsynth.imgcore import save_png
from toolsynth.pools import build_pools, load_seed_dir

OUT = Path(__file__).parent / "output" / "01"


def grid(images, cols, pad=4):
    """Tile equally sized images into one contact sheet."""
    h, w = images[0].shape[:2]
    rows = -(-len(images) // cols)
    sheet = np.full((rows * (h + pad) + pad, cols * (w + pad) + pad, 3), 28, np.uint8)
    for i, img in enumerate(images):
        r, c = divmod(i, cols)
        y = pad + r * (h + pad)
        x = pad + c * (w + pad)
        sheet[y : y + h, x : x + w] = img[..., :3]
    return sheet


def on_checker(rgba, cell=8):
    """Composite an RGBA sprite over a checkerboard to show transparency."""
    h, w = rgba.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w]
    checker = np.where(((yy // cell + xx // cell) % 2) == 0, 90, 60).astype(np.uint8)
    out = np.stack([checker] * 3, axis=-1)
    alpha = rgba[..., 3:].astype(np.float32) / 255.0
    return (alpha * rgba[..., :3] + (1 - alpha) * out).astype(np.uint8)


def main():
    seeds_dir = toydata.write_toy_seed_dir(OUT / "seeds", seeds_per_class=3, seed=11)
    background, seed_sprites = load_seed_dir(seeds_dir, seeds_per_class=3)
    print(f"seeds: 1 background + {sum(len(v) for v in seed_sprites.values())} sprites")

    pools = build_pools(
        background, seed_sprites, m=12, n=6, master_seed=2023, seeds_per_class=3
    )

    save_png(grid(list(pools.backgrounds), cols=4), OUT / "background_pool.png")
    first_class = pools.foregrounds[0]
    save_png(
        grid([on_checker(s.image) for s in first_class], cols=3),
        OUT / "foreground_pool_class0.png",
    )

    record = first_class[0].chain
    print(f"sprite 0 chain ({len(record.transforms)} steps):")
    for t in record.transforms:
        print(f"  {t.kind}: {t.params}")
    print(f"wrote contact sheets to {OUT}")


if __name__ == "__main__":
    main()

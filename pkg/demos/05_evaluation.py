"""Score predicted masks against ground truth with the Dice coefficient.

Simulates predictions of varying quality by eroding/dilating ground-truth
masks, then evaluates a whole directory pair and prints the report.

Run: python demos/05_evaluation.py
Outputs land in demos/output/05/.
"""

from pathlib import Path

import numpy as np
from scipy import ndimage

from toolsynth import toydata
from toolsynth.compose import DatasetSpec, generate_dataset
from toolsynth.evaluate import dsc, evaluate_dir
from toolsynth.imgcore import load_png, save_png
from toolsynth.pools import build_pools, load_seed_dir

OUT = Path(__file__).parent / "output" / "05"


def main():
    seeds_dir = toydata.write_toy_seed_dir(OUT / "seeds", seeds_per_class=3, seed=41)
    background, seed_sprites = load_seed_dir(seeds_dir, seeds_per_class=3)
    pools = build_pools(background, seed_sprites, m=4, n=4, master_seed=55, seeds_per_class=3)
    spec = DatasetSpec(
        name="demo-eval",
        seeds_per_instrument=3,
        fg_distribution={1: 0.5, 2: 0.5},
        count=10,
        blend_mode="alpha",
        master_seed=55,
        canvas=(160, 160),
    )
    manifest = generate_dataset(spec, pools, OUT / "dataset")

    rng = np.random.default_rng(2)
    for sample in manifest["samples"]:
        gt = load_png(OUT / "dataset" / sample["mask"], "mask")
        rounds = int(rng.integers(0, 4))
        if rng.random() < 0.5:
            pred = ndimage.binary_erosion(gt, iterations=rounds + 1).astype(np.uint8)
        else:
            pred = ndimage.binary_dilation(gt, iterations=rounds + 1).astype(np.uint8)
        save_png(pred, OUT / "pred" / Path(sample["mask"]).name)
        save_png(gt, OUT / "gt" / Path(sample["mask"]).name)

    report = evaluate_dir(OUT / "pred", OUT / "gt")
    print(report.to_text())

    both_empty = np.zeros((8, 8), np.uint8)
    print(f"\nboth-empty convention: dsc = {dsc(both_empty, both_empty)}")


if __name__ == "__main__":
    main()

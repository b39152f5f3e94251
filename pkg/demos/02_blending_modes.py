"""Compare the three blending modes on the same scene.

Alpha blending hard-copies the sprite; Gaussian blending feathers the
boundary through an eroded-and-blurred matte; Laplacian blending merges the
two images band by band so boundary detail mixes at every scale.

Run: python demos/02_blending_modes.py
Outputs land in demos/output/02/.
"""

from pathlib import Path

import numpy as np

from toolsynth import toydata
from toolsynth.blend import alpha_blend, gaussian_blend, laplacian_blend
from toolsynth.compose import Placement, place_sprite
from toolsynth.imgcore import save_png
from toolsynth.pools import sprite_from_rgba

OUT = Path(__file__).parent / "output" / "02"


def main():
    canvas = (320, 320)
    bg = toydata.toy_background(*canvas, seed=5)
    sprite = sprite_from_rgba(toydata.toy_sprite(200, 130, seed=9, jaw_open=True), 0)
    placement = Placement(scale=1.3, rotation=25.0, dx=10.0, dy=-20.0, z_order=0)
    rgb, mask = place_sprite(sprite, placement, canvas)
    fg_canvas = np.where(mask[..., None] == 1, rgb, bg)

    results = {
        "alpha": alpha_blend(fg_canvas, bg, mask),
        "gaussian": gaussian_blend(fg_canvas, bg, mask)[0],
        "laplacian": laplacian_blend(fg_canvas, bg, mask, levels=4),
    }
    for name, image in results.items():
        save_png(image, OUT / f"{name}.png")
    save_png(mask, OUT / "mask.png")
    save_png(bg, OUT / "background.png")

    # zoom into the boundary to make the differences visible
    ys, xs = np.where(mask == 1)
    y, x = int(ys.min()), int((xs.min() + xs.max()) // 2)
    box = np.s_[max(y - 24, 0) : y + 24, x - 24 : x + 24]
    strip = np.concatenate([results[m][box] for m in ("alpha", "gaussian", "laplacian")], axis=1)
    save_png(strip, OUT / "boundary_zoom_alpha_gaussian_laplacian.png")
    print(f"wrote blend comparisons to {OUT}")


if __name__ == "__main__":
    main()

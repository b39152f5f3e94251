import numpy as np
import pytest

from toolsynth import compose, pools, toydata
from toolsynth.pools import sprite_from_rgba


@pytest.fixture(scope="session")
def toy_bg():
    return toydata.toy_background(192, 160, seed=3)


@pytest.fixture(scope="session")
def seed_sprites():
    return {
        c: [
            sprite_from_rgba(
                toydata.toy_sprite(96, 64, seed=c * 10 + k, jaw_open=(k % 2 == 1)), c, k
            )
            for k in range(3)
        ]
        for c in range(8)
    }


@pytest.fixture(scope="session")
def small_pools(toy_bg, seed_sprites):
    return pools.build_pools(
        toy_bg, seed_sprites, m=6, n=4, master_seed=1234, seeds_per_class=3
    )


@pytest.fixture(scope="session")
def tiny_dataset(small_pools, tmp_path_factory):
    """A 12-sample generated dataset reused by stats/stream/CLI tests."""
    out = tmp_path_factory.mktemp("tinyds")
    spec = compose.DatasetSpec(
        name="tiny",
        seeds_per_instrument=3,
        fg_distribution={1: 0.5, 2: 0.5},
        count=12,
        blend_mode="laplacian",
        master_seed=77,
        canvas=(128, 128),
    )
    manifest = compose.generate_dataset(spec, small_pools, out)
    return out, spec, manifest


@pytest.fixture
def rng():
    return np.random.default_rng(0)

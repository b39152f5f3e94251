"""toolsynth: deterministic synthesis of annotated binary-segmentation
datasets from one background seed image and a few sprite seeds per
instrument class.

Pipeline: seed images -> augmented pools -> blended scene composition
(alpha / gaussian / laplacian) -> optional training-time batch augmentation
-> DSC evaluation. Everything downstream of the seeds is a pure function of
the master seed.
"""

from .augment import (
    AugmentRanges,
    TransformChainRecord,
    TransformParams,
    apply_chain,
    apply_geometric,
    apply_intensity,
    sample_chain,
)
from .blend import (
    Pyramid,
    alpha_blend,
    build_gaussian_pyramid,
    build_laplacian_pyramid,
    collapse,
    gaussian_blend,
    laplacian_blend,
)
from .compose import (
    DatasetSpec,
    MixRecipe,
    Placement,
    ScenePair,
    compose_scene,
    generate_dataset,
    load_manifest,
    mix_datasets,
    render_sample,
    sample_placement,
)
from .errors import ConfigError, DataIOError, InvariantError
from .evaluate import EvalReport, dataset_stats, dsc, evaluate_dir
from .imgcore import load_png, mask_area, mask_union, quantize_u8, save_png
from .pools import (
    DEFAULT_CLASS_NAMES,
    PoolSet,
    Sprite,
    build_background_pool,
    build_foreground_pools,
    build_pools,
    load_pool_cache,
    load_seed_dir,
    save_pool_cache,
    sprite_from_rgba,
)
from .rng import derive_rng, derive_seed
from .trainaug import (
    Batch,
    CamConfig,
    CdoConfig,
    EpmConfig,
    StreamConfig,
    cam,
    cdo,
    epm,
    hybrid,
    stream_batches,
    write_augmented,
)

__version__ = "0.1.0"

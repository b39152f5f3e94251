"""Engine configuration: one versioned JSON document per experiment.

A stored config plus the seed images reproduces every artifact byte-exactly.
Unknown keys are rejected so typos cannot silently fall back to defaults, and
there is no wall-clock seeding anywhere: a run without a master seed (from
config or --seed) is an error.
"""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path

from .augment import AugmentRanges
from .compose import DatasetSpec
from .errors import ConfigError
from .pools import DEFAULT_CLASS_NAMES
from .trainaug import CamConfig, CdoConfig, EpmConfig, StreamConfig

CONFIG_VERSION = 1

DEFAULT_CONFIG: dict = {
    "version": CONFIG_VERSION,
    "master_seed": None,
    "jobs": None,
    "seeds": {
        "dir": "seeds",
        "classes": list(DEFAULT_CLASS_NAMES),
        "per_class": 3,
    },
    "pools": {"dir": "pools", "m": 500, "n": 200},
    "augment": {"ranges": AugmentRanges().to_dict()},
    "blend": {"mode": "laplacian", "levels": 4},
    "dataset": {
        "name": "synthetic",
        "count": 2235,
        "fg_distribution": {"1": 0.2, "2": 0.8},
        "canvas": [512, 512],
        "out_dir": "out",
    },
    "trainaug": {
        "batch_size": 8,
        "epochs": 1,
        "order": ["epm", "cam", "cdo"],
        "out_dir": "augmented",
        "stream_port": None,
        "cam": {
            "enabled": True,
            "severity": 3,
            "width": 3,
            "depth_range": [1, 3],
            "alpha": 1.0,
            "op_set": "soft",
        },
        "cdo": {
            "enabled": True,
            "num_range": [1, 8],
            "size_range": [0.05, 0.20],
            "shapes": ["rect", "circle"],
            "apply_prob": 0.5,
        },
        "epm": {"enabled": True, "prob": 0.5},
    },
    "mix": {"rounding": "half_away"},
}


def _merge(defaults: dict, overrides: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in overrides.items():
        here = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(defaults[key], dict) and isinstance(value, dict):
            out[key] = _merge(defaults[key], value, here)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, overlaid with the config file, overlaid with CLI overrides."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if data.get("version", CONFIG_VERSION) != CONFIG_VERSION:
            raise ConfigError(f"{path}: unsupported config version {data.get('version')}")
        cfg = _merge(cfg, data)
    if overrides:
        cfg = _merge(cfg, overrides)
    return cfg


def require_seed(cfg: dict) -> int:
    seed = cfg.get("master_seed")
    if seed is None:
        raise ConfigError(
            "no master seed: set master_seed in the config or pass --seed "
            "(the engine never seeds from the clock)"
        )
    return int(seed)


def resolve_jobs(cfg: dict) -> int:
    """jobs precedence: --jobs flag (already merged) > config > TOOLSYNTH_JOBS
    env var > logical core count."""
    if cfg.get("jobs") is not None:
        return int(cfg["jobs"])
    env = os.environ.get("TOOLSYNTH_JOBS")
    if env is not None:
        return int(env)
    return os.cpu_count() or 1


def ranges_from_config(cfg: dict) -> AugmentRanges:
    return AugmentRanges.from_dict(cfg["augment"]["ranges"])


def dataset_spec_from_config(cfg: dict) -> DatasetSpec:
    d = cfg["dataset"]
    return DatasetSpec(
        name=d["name"],
        seeds_per_instrument=int(cfg["seeds"]["per_class"]),
        fg_distribution={int(k): float(v) for k, v in d["fg_distribution"].items()},
        count=int(d["count"]),
        blend_mode=cfg["blend"]["mode"],
        master_seed=require_seed(cfg),
        canvas=tuple(d["canvas"]),
        levels=int(cfg["blend"]["levels"]),
    )


def stream_config_from_config(cfg: dict) -> StreamConfig:
    t = cfg["trainaug"]

    def build(section, cls):
        params = {k: v for k, v in section.items() if k != "enabled"}
        for key in ("depth_range", "num_range", "size_range", "shapes"):
            if key in params:
                params[key] = tuple(params[key])
        return cls(**params) if section.get("enabled", True) else None

    return StreamConfig(
        batch_size=int(t["batch_size"]),
        epochs=int(t["epochs"]),
        master_seed=require_seed(cfg),
        cam=build(t["cam"], CamConfig),
        cdo=build(t["cdo"], CdoConfig),
        epm=build(t["epm"], EpmConfig),
        order=tuple(t["order"]),
    )

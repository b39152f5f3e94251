"""Command-line entry point wiring pools, synth, augment, eval, stats, mix.

Exit codes: 0 success, 1 usage/config error, 2 I/O error, 3 invariant
violation. Every subcommand echoes its effective resolved configuration to
stderr so runs are self-documenting.
"""

from __future__ import annotations

import argparse
import json
import shutil
import socket
import sys
from pathlib import Path

from . import compose, evaluate, pools, trainaug
from .config import (
    dataset_spec_from_config,
    load_config,
    ranges_from_config,
    require_seed,
    resolve_jobs,
    stream_config_from_config,
)
from .errors import ConfigError, DataIOError, InvariantError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _echo(payload: dict) -> None:
    print(json.dumps(payload, indent=2, default=str), file=sys.stderr)


def _config_from_args(args) -> dict:
    overrides: dict = {}
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    cfg = load_config(getattr(args, "config", None), overrides)
    _echo(cfg)
    return cfg


def _cmd_pools(args) -> int:
    cfg = _config_from_args(args)
    seed = require_seed(cfg)
    ranges = ranges_from_config(cfg)
    jobs = resolve_jobs(cfg)
    classes = tuple(cfg["seeds"]["classes"])
    background, seed_sprites = pools.load_seed_dir(
        cfg["seeds"]["dir"], classes, int(cfg["seeds"]["per_class"])
    )
    pool_set = pools.build_pools(
        background,
        seed_sprites,
        m=int(cfg["pools"]["m"]),
        n=int(cfg["pools"]["n"]),
        master_seed=seed,
        class_names=classes,
        seeds_per_class=int(cfg["seeds"]["per_class"]),
        ranges=ranges,
        jobs=jobs,
    )
    pool_dir = Path(cfg["pools"]["dir"])
    try:
        pools.save_pool_cache(pool_set, pool_dir)
    except BaseException:
        shutil.rmtree(pool_dir, ignore_errors=True)
        raise
    print(
        f"pools: {len(pool_set.backgrounds)} backgrounds, "
        f"{sum(len(s) for s in pool_set.foregrounds.values())} sprites "
        f"across {len(classes)} classes -> {pool_dir}"
    )
    return 0


def _cmd_synth(args) -> int:
    cfg = _config_from_args(args)
    spec = dataset_spec_from_config(cfg)
    pool_dir = Path(cfg["pools"]["dir"])
    pool_set = pools.load_pool_cache(pool_dir)
    out_dir = Path(args.out) if args.out else Path(cfg["dataset"]["out_dir"])
    jobs = resolve_jobs(cfg)
    manifest = compose.generate_dataset(spec, pool_set, out_dir, jobs=jobs, pool_dir=pool_dir)
    histogram = {}
    for sample in manifest["samples"]:
        histogram[len(sample["sprites"])] = histogram.get(len(sample["sprites"]), 0) + 1
    print(
        f"synth: {len(manifest['samples'])} samples -> {out_dir} "
        f"(blend={spec.blend_mode}, seed={spec.master_seed}, "
        f"instruments-per-image={histogram})"
    )
    return 0


def _cmd_augment(args) -> int:
    cfg = _config_from_args(args)
    stream_cfg = stream_config_from_config(cfg)
    if args.stream:
        port = cfg["trainaug"]["stream_port"]
        if port is None:
            batches = trainaug.stream_batches(args.manifest, stream_cfg, sys.stdout.buffer)
        else:
            with socket.create_server(("127.0.0.1", int(port))) as server:
                print(f"augment: serving TSYN1 on 127.0.0.1:{port}", file=sys.stderr)
                conn, _ = server.accept()
                with conn, conn.makefile("wb") as sink:
                    batches = trainaug.stream_batches(args.manifest, stream_cfg, sink)
        print(f"augment: streamed {batches} batches", file=sys.stderr)
        return 0
    out_dir = Path(args.out) if args.out else Path(cfg["trainaug"]["out_dir"])
    manifest = trainaug.write_augmented(args.manifest, stream_cfg, out_dir)
    print(f"augment: wrote {len(manifest['samples'])} augmented pairs -> {out_dir}")
    return 0


def _cmd_eval(args) -> int:
    _echo({"pred_dir": args.pred_dir, "gt_dir": args.gt_dir, "json": args.json})
    report = evaluate.evaluate_dir(args.pred_dir, args.gt_dir)
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_json(), indent=2) + "\n")
    print(report.to_text())
    return 0


def _cmd_stats(args) -> int:
    _echo({"manifest": args.manifest, "json": args.json})
    report = evaluate.dataset_stats(args.manifest)
    text = json.dumps(report, indent=2)
    if args.json:
        Path(args.json).write_text(text + "\n")
    print(text)
    return 0


def _cmd_mix(args) -> int:
    cfg = _config_from_args(args)
    seed = require_seed(cfg)
    mode, _, fraction = args.recipe.partition(":")
    if not fraction:
        raise ConfigError(f"recipe must look like replace:0.1 or augment:0.2, got {args.recipe!r}")
    recipe = compose.MixRecipe(
        mode=mode, fraction=float(fraction), rounding=cfg["mix"]["rounding"]
    )
    manifest = compose.mix_datasets(args.manifest, args.real, recipe, seed, args.out)
    origins = {}
    for sample in manifest["samples"]:
        origins[sample["origin"]] = origins.get(sample["origin"], 0) + 1
    print(f"mix: {len(manifest['samples'])} entries -> {args.out} ({origins})")
    return 0


def _add_config_args(p, jobs: bool = True) -> None:
    p.add_argument("--config", help="engine config JSON")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    if jobs:
        p.add_argument("--jobs", type=int, help="worker count (default: logical cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="toolsynth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pools", help="build and cache the background/foreground pools")
    _add_config_args(p)
    p.set_defaults(func=_cmd_pools)

    p = sub.add_parser("synth", help="generate a dataset from cached pools")
    _add_config_args(p)
    p.add_argument("--out", help="output directory (default: dataset.out_dir)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("augment", help="apply training-time augmentation offline or as a stream")
    _add_config_args(p, jobs=False)
    p.add_argument("--manifest", required=True, help="input dataset manifest")
    p.add_argument("--out", help="output directory for offline PNG pairs")
    p.add_argument("--stream", action="store_true", help="emit the TSYN1 byte stream instead")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("eval", help="mean/std DSC between two mask directories")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="composition statistics of a manifest")
    p.add_argument("manifest")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("mix", help="mix a synthetic manifest with real image/mask pairs")
    _add_config_args(p, jobs=False)
    p.add_argument("--manifest", required=True, help="synthetic dataset manifest")
    p.add_argument("--real", required=True, help="directory holding images/ and masks/")
    p.add_argument("--recipe", required=True, help="replace:FRACTION or augment:FRACTION")
    p.add_argument("--out", required=True, help="output manifest path")
    p.set_defaults(func=_cmd_mix)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataIOError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (InvariantError, ValueError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

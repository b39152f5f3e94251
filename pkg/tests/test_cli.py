import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from toolsynth import toydata
from toolsynth.cli import main
from toolsynth.config import DEFAULT_CONFIG, load_config, resolve_jobs
from toolsynth.errors import ConfigError
from toolsynth.imgcore import load_png, save_png


def write_config(path: Path, workdir: Path, **dataset_overrides) -> Path:
    cfg = {
        "master_seed": 99,
        "jobs": 1,
        "seeds": {"dir": str(workdir / "seeds"), "per_class": 2},
        "pools": {"dir": str(workdir / "pools"), "m": 4, "n": 3},
        "blend": {"mode": "alpha", "levels": 4},
        "dataset": {
            "name": "cli-test",
            "count": 6,
            "fg_distribution": {"1": 0.5, "2": 0.5},
            "canvas": [64, 64],
            "out_dir": str(workdir / "out"),
            **dataset_overrides,
        },
        "trainaug": {"batch_size": 3, "epochs": 1},
    }
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture
def workspace(tmp_path):
    toydata.write_toy_seed_dir(
        tmp_path / "seeds", seeds_per_class=2, background_size=(96, 96), sprite_size=(64, 48)
    )
    cfg = write_config(tmp_path / "cfg.json", tmp_path)
    return tmp_path, cfg


# --- config ------------------------------------------------------------------------


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"master_seed": 1, "surprise": 2}))
    with pytest.raises(ConfigError, match="surprise"):
        load_config(path)


def test_config_rejects_nested_unknown_keys(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"blend": {"mode": "alpha", "sigma": 3}}))
    with pytest.raises(ConfigError, match="blend.sigma"):
        load_config(path)


def test_config_overrides_win(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"master_seed": 1}))
    cfg = load_config(path, {"master_seed": 2})
    assert cfg["master_seed"] == 2


def test_config_defaults_keep_table_one_recipe():
    assert DEFAULT_CONFIG["dataset"]["fg_distribution"] == {"1": 0.2, "2": 0.8}
    assert DEFAULT_CONFIG["dataset"]["count"] == 2235


def test_resolve_jobs_env_fallback(monkeypatch):
    monkeypatch.setenv("TOOLSYNTH_JOBS", "5")
    assert resolve_jobs({"jobs": None}) == 5
    assert resolve_jobs({"jobs": 2}) == 2
    monkeypatch.delenv("TOOLSYNTH_JOBS")
    assert resolve_jobs({"jobs": None}) >= 1


def test_missing_seed_is_usage_error(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({}))
    code = main(["pools", "--config", str(path)])
    assert code == 1
    assert "master seed" in capsys.readouterr().err


# --- subcommand pipeline -------------------------------------------------------------


def test_pools_synth_stats_eval_pipeline(workspace, capsys):
    tmp_path, cfg = workspace
    assert main(["pools", "--config", str(cfg)]) == 0
    pool_pngs = list((tmp_path / "pools").rglob("*.png"))
    assert len(pool_pngs) == 4 + 3 * 8

    assert main(["synth", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["samples"]) == 6

    assert main(["stats", str(out / "manifest.json")]) == 0
    stats_stdout = capsys.readouterr().out
    assert '"instruments_per_image"' in stats_stdout

    assert main(["eval", str(out / "masks"), str(out / "masks")]) == 0
    eval_out = capsys.readouterr().out
    assert "1.000000" in eval_out


def test_pools_rerun_identical_cache(workspace):
    tmp_path, cfg = workspace

    def digest():
        h = hashlib.sha256()
        for p in sorted((tmp_path / "pools").rglob("*")):
            if p.is_file():
                h.update(p.relative_to(tmp_path).as_posix().encode())
                h.update(p.read_bytes())
        return h.hexdigest()

    assert main(["pools", "--config", str(cfg)]) == 0
    first = digest()
    assert main(["pools", "--config", str(cfg)]) == 0
    assert digest() == first


def test_pools_wrong_seed_count_names_class(tmp_path, capsys):
    toydata.write_toy_seed_dir(tmp_path / "seeds", seeds_per_class=2)
    cfg = tmp_path / "c.json"
    cfg.write_text(
        json.dumps(
            {
                "master_seed": 1,
                "seeds": {"dir": str(tmp_path / "seeds"), "per_class": 3},
                "pools": {"dir": str(tmp_path / "pools"), "m": 2, "n": 2},
            }
        )
    )
    code = main(["pools", "--config", str(cfg)])
    assert code == 1
    assert "fenestrated_bipolar_forceps" in capsys.readouterr().err


def test_synth_without_pools_is_io_error(workspace, capsys):
    tmp_path, cfg = workspace
    assert main(["synth", "--config", str(cfg)]) == 2


def test_seed_flag_overrides_config(workspace, capsys):
    tmp_path, cfg = workspace
    assert main(["pools", "--config", str(cfg), "--seed", "123"]) == 0
    meta = json.loads((tmp_path / "pools" / "meta.json").read_text())
    assert meta["master_seed"] == 123


def test_effective_config_echoed_to_stderr(workspace, capsys):
    tmp_path, cfg = workspace
    main(["pools", "--config", str(cfg)])
    err = capsys.readouterr().err
    assert '"master_seed": 99' in err
    assert '"mode": "alpha"' in err


def test_eval_dimension_mismatch_is_invariant_error(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    save_png(np.ones((4, 4), np.uint8), a / "x.png")
    save_png(np.ones((5, 5), np.uint8), b / "x.png")
    assert main(["eval", str(a), str(b)]) == 3


def test_eval_unpaired_is_io_error(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    save_png(np.ones((4, 4), np.uint8), a / "x.png")
    save_png(np.ones((4, 4), np.uint8), b / "y.png")
    assert main(["eval", str(a), str(b)]) == 2


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1


def test_augment_offline_and_mix(workspace, capsys, tmp_path):
    ws, cfg = workspace
    assert main(["pools", "--config", str(cfg)]) == 0
    assert main(["synth", "--config", str(cfg)]) == 0
    manifest = ws / "out" / "manifest.json"

    aug_dir = ws / "aug"
    assert main(["augment", "--config", str(cfg), "--manifest", str(manifest), "--out", str(aug_dir)]) == 0
    aug_manifest = json.loads((aug_dir / "manifest.json").read_text())
    assert len(aug_manifest["samples"]) == 6
    for rec in aug_manifest["samples"][:2]:
        assert (aug_dir / rec["image"]).is_file()
        assert (aug_dir / rec["mask"]).is_file()

    real = ws / "real"
    img = np.full((64, 64, 3), 7, np.uint8)
    msk = np.zeros((64, 64), np.uint8)
    msk[10:20, 10:20] = 1
    for i in range(4):
        save_png(img, real / "images" / f"{i}.png")
        save_png(msk, real / "masks" / f"{i}.png")
    mix_out = ws / "mixed.json"
    assert main([
        "mix", "--config", str(cfg), "--manifest", str(manifest),
        "--real", str(real), "--recipe", "replace:0.5", "--out", str(mix_out),
    ]) == 0
    mixed = json.loads(mix_out.read_text())
    origins = [s["origin"] for s in mixed["samples"]]
    assert origins.count("real") == 3  # round_half_away(0.5 * 6)
    assert len(origins) == 6


def test_mix_bad_recipe_is_usage_error(workspace):
    ws, cfg = workspace
    assert main(["mix", "--config", str(cfg), "--manifest", "m.json",
                 "--real", "r", "--recipe", "replace", "--out", "o.json"]) == 1


def test_stream_subcommand_emits_tsyn1(workspace):
    ws, cfg = workspace
    assert main(["pools", "--config", str(cfg)]) == 0
    assert main(["synth", "--config", str(cfg)]) == 0
    manifest = ws / "out" / "manifest.json"
    proc = subprocess.run(
        [sys.executable, "-m", "toolsynth.cli", "augment", "--config", str(cfg),
         "--manifest", str(manifest), "--stream"],
        capture_output=True,
    )
    assert proc.returncode == 0, proc.stderr.decode()
    assert proc.stdout.startswith(b"TSYN1")
    assert len(proc.stdout) > 5

import io
import struct

import numpy as np
import pytest
from PIL import Image, ImageEnhance, ImageOps

from toolsynth.errors import ConfigError, InvariantError
from toolsynth.trainaug import (
    Batch,
    CamConfig,
    CamPlan,
    CdoConfig,
    EpmConfig,
    Exchange,
    StreamConfig,
    apply_cam_plan,
    apply_cdo_regions,
    apply_epm_exchanges,
    cam,
    cdo,
    epm,
    hybrid,
    iter_augmented_batches,
    sample_cam_plan,
    sample_cdo_regions,
    sample_epm_exchanges,
    stream_batches,
    write_augmented,
)


def gradient_image(h=16, w=16):
    yy, xx = np.mgrid[0:h, 0:w]
    img = ((xx * 255) // max(w - 1, 1)).astype(np.uint8)
    return np.stack([img, ((yy * 255) // max(h - 1, 1)).astype(np.uint8), img // 2], -1)


def random_batch(rng, size=4, h=16, w=16):
    pairs = []
    for _ in range(size):
        img = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
        mask = (rng.random((h, w)) < 0.3).astype(np.uint8)
        pairs.append((img, mask))
    return Batch(pairs=pairs)


# --- chain mixing ----------------------------------------------------------------


def test_cam_mix_weight_one_is_identity(rng):
    img = gradient_image()
    plan = CamPlan(mix_weight=1.0, chain_weights=(1.0, 0.0, 0.0),
                   chains=((("autocontrast", None),),) * 3)
    assert np.array_equal(apply_cam_plan(img, plan), img)


def test_cam_fixed_point_chain():
    img = np.full((8, 8, 3), 128, np.uint8)  # fixed point of every soft op
    plan = CamPlan(
        mix_weight=0.0,
        chain_weights=(1.0, 0.0, 0.0),
        chains=(
            (("autocontrast", None), ("equalize", None)),
            (("solarize", 179),),
            (("posterize", 6),),
        ),
    )
    assert np.array_equal(apply_cam_plan(img, plan), img)


def test_cam_matches_scalar_oracle(rng):
    # replicate the mixing formula step by step with independent PIL calls
    img = gradient_image(4, 4)
    cfg = CamConfig(severity=3, width=3, op_set="hard")
    plan = sample_cam_plan(cfg, np.random.default_rng(5))
    out = apply_cam_plan(img, plan)

    def run_op(arr, name, arg):
        pil = Image.fromarray(arr, "RGB")
        ops = {
            "autocontrast": lambda: ImageOps.autocontrast(pil),
            "equalize": lambda: ImageOps.equalize(pil),
            "posterize": lambda: ImageOps.posterize(pil, int(arg)),
            "solarize": lambda: ImageOps.solarize(pil, int(arg)),
            "color": lambda: ImageEnhance.Color(pil).enhance(float(arg)),
            "contrast": lambda: ImageEnhance.Contrast(pil).enhance(float(arg)),
            "brightness": lambda: ImageEnhance.Brightness(pil).enhance(float(arg)),
            "sharpness": lambda: ImageEnhance.Sharpness(pil).enhance(float(arg)),
        }
        return np.asarray(ops[name]())

    expected = np.zeros((4, 4, 3), np.float64)
    for weight, chain in zip(plan.chain_weights, plan.chains):
        current = img
        for name, arg in chain:
            current = run_op(current, name, arg)
        expected += weight * current.astype(np.float64)
    expected = plan.mix_weight * img + (1 - plan.mix_weight) * expected
    assert np.abs(out.astype(np.float64) - expected).max() <= 1.0


def test_cam_output_range_and_determinism(rng):
    img = gradient_image()
    cfg = CamConfig()
    a = cam(img, cfg, np.random.default_rng(3))
    b = cam(img, cfg, np.random.default_rng(3))
    assert np.array_equal(a, b)
    assert a.dtype == np.uint8


def test_cam_soft_set_excludes_enhance_ops():
    cfg = CamConfig(op_set="soft")
    names = {
        name
        for seed in range(200)
        for chain in sample_cam_plan(cfg, np.random.default_rng(seed)).chains
        for name, _ in chain
    }
    assert names <= {"autocontrast", "equalize", "posterize", "solarize"}


def test_cam_severity_mapping():
    cfg = CamConfig(severity=3, width=1, depth_range=(1, 1), op_set="hard")
    seen = {}
    for seed in range(400):
        plan = sample_cam_plan(cfg, np.random.default_rng(seed))
        name, arg = plan.chains[0][0]
        seen.setdefault(name, set()).add(arg)
    assert seen["posterize"] == {6}  # 8 - ceil(3 * 4 / 10)
    assert seen["solarize"] == {179}  # 256 - ceil(3 * 25.6)
    assert seen["brightness"] <= {1.27, 0.73}


def test_cam_config_validation():
    with pytest.raises(ConfigError):
        CamConfig(severity=11)
    with pytest.raises(ConfigError):
        CamConfig(op_set="medium")


# --- coarse dropout -----------------------------------------------------------------


def test_cdo_apply_prob_zero_identity(rng):
    img = gradient_image()
    mask = (np.random.default_rng(0).random((16, 16)) < 0.5).astype(np.uint8)
    out_img, out_mask = cdo(img, mask, CdoConfig(apply_prob=0.0), np.random.default_rng(1))
    assert np.array_equal(out_img, img)
    assert np.array_equal(out_mask, mask)


def test_cdo_full_image_rectangle_zeroes_everything(rng):
    img = gradient_image()
    mask = np.ones((16, 16), np.uint8)
    out_img, out_mask = apply_cdo_regions(img, mask, [("rect", 0, 0, 16, 16)])
    assert out_img.max() == 0
    assert out_mask.max() == 0


def test_cdo_known_rectangle_region_membership(rng):
    img = np.random.default_rng(2).integers(0, 256, (32, 32, 3), dtype=np.uint8)
    mask = np.ones((32, 32), np.uint8)
    out_img, out_mask = apply_cdo_regions(img, mask, [("rect", 4, 6, 12, 14)])
    for y in range(32):
        for x in range(32):
            inside = 4 <= x < 12 and 6 <= y < 14
            if inside:
                assert out_img[y, x].max() == 0 and out_mask[y, x] == 0
            else:
                assert np.array_equal(out_img[y, x], img[y, x])
                assert out_mask[y, x] == mask[y, x]


def test_cdo_image_and_mask_change_identical_pixels(rng):
    for seed in range(30):
        img = rng.integers(0, 256, (24, 24, 3), dtype=np.uint8)
        img[img == 0] = 1  # make "dropped to zero" unambiguous
        mask = np.ones((24, 24), np.uint8)
        out_img, out_mask = cdo(img, mask, CdoConfig(apply_prob=1.0), np.random.default_rng(seed))
        img_changed = np.any(out_img != img, axis=-1)
        mask_changed = out_mask != mask
        assert np.array_equal(img_changed, mask_changed)
        assert np.all(out_mask[mask_changed] == 0)
        assert np.all(out_img[img_changed] == 0)


def test_cdo_region_sampler_shapes_and_counts(rng):
    cfg = CdoConfig(apply_prob=1.0)
    for seed in range(50):
        regions = sample_cdo_regions((64, 64), cfg, np.random.default_rng(seed))
        assert 1 <= len(regions) <= 8
        for region in regions:
            assert region[0] in ("rect", "circle")


# --- element-wise patch mixing -------------------------------------------------------


def test_epm_prob_zero_identity(rng):
    batch = random_batch(rng)
    out = epm(batch, EpmConfig(prob=0.0), np.random.default_rng(0))
    for (a_img, a_mask), (b_img, b_mask) in zip(out.pairs, batch.pairs):
        assert np.array_equal(a_img, b_img)
        assert np.array_equal(a_mask, b_mask)


def test_epm_whole_image_exchange_copies_partner(rng):
    batch = random_batch(rng, size=3)
    out = apply_epm_exchanges(batch, [Exchange(0, 2, 0, 0, 16, 16)])
    assert np.array_equal(out.pairs[0][0], batch.pairs[2][0])
    assert np.array_equal(out.pairs[0][1], batch.pairs[2][1])
    assert np.array_equal(out.pairs[1][0], batch.pairs[1][0])


def test_epm_patch_provenance_per_pixel(rng):
    batch = random_batch(rng, size=2, h=32, w=32)
    ex = Exchange(target=0, partner=1, x0=5, y0=9, x1=21, y1=25)  # 16x16 patch
    out = apply_epm_exchanges(batch, [ex])
    src_img, src_mask = batch.pairs[1]
    orig_img, orig_mask = batch.pairs[0]
    for y in range(32):
        for x in range(32):
            inside = 5 <= x < 21 and 9 <= y < 25
            want_img = src_img[y, x] if inside else orig_img[y, x]
            want_mask = src_mask[y, x] if inside else orig_mask[y, x]
            assert np.array_equal(out.pairs[0][0][y, x], want_img)
            assert out.pairs[0][1][y, x] == want_mask


def test_epm_masks_stay_binary(rng):
    batch = random_batch(rng, size=5)
    out = epm(batch, EpmConfig(prob=1.0), np.random.default_rng(9))
    for _, mask in out.pairs:
        assert set(np.unique(mask)) <= {0, 1}


def test_epm_batch_of_one_rejected(rng):
    batch = random_batch(rng, size=1)
    with pytest.raises(InvariantError):
        epm(batch, EpmConfig(prob=0.5), np.random.default_rng(0))


def test_epm_partner_never_self(rng):
    for seed in range(100):
        exchanges = sample_epm_exchanges(
            4, (16, 16), EpmConfig(prob=1.0), np.random.default_rng(seed)
        )
        for ex in exchanges:
            assert ex.partner != ex.target


def test_epm_lambda_zero_covers_whole_image():
    class ForcedRng:
        def random(self):
            # selection draw and lambda draw both forced to 0
            return 0.0

        def integers(self, n):
            # partner index 0; patch center at the image midpoint
            return n // 2 if n > 1 else 0

    exchanges = sample_epm_exchanges(2, (16, 16), EpmConfig(prob=1.0), ForcedRng())
    ex = exchanges[0]
    assert (ex.x0, ex.y0, ex.x1, ex.y1) == (0, 0, 16, 16)


# --- hybrid ---------------------------------------------------------------------------


def test_hybrid_all_disabled_is_bit_exact_identity(rng):
    batch = random_batch(rng)
    out = hybrid(batch, None, None, None, np.random.default_rng(0))
    for (a_img, a_mask), (b_img, b_mask) in zip(out.pairs, batch.pairs):
        assert a_img is b_img or np.array_equal(a_img, b_img)
        assert a_mask is b_mask or np.array_equal(a_mask, b_mask)


def test_hybrid_cam_only_leaves_masks_bit_identical(rng):
    batch = random_batch(rng)
    out = hybrid(batch, CamConfig(), None, None, np.random.default_rng(1))
    for (_, a_mask), (_, b_mask) in zip(out.pairs, batch.pairs):
        assert np.array_equal(a_mask, b_mask)


def test_hybrid_replay_is_deterministic(rng):
    batch = random_batch(rng, size=6)
    args = (CamConfig(), CdoConfig(), EpmConfig())
    a = hybrid(batch, *args, np.random.default_rng(17))
    b = hybrid(batch, *args, np.random.default_rng(17))
    for (a_img, a_mask), (b_img, b_mask) in zip(a.pairs, b.pairs):
        assert np.array_equal(a_img, b_img)
        assert np.array_equal(a_mask, b_mask)


def test_hybrid_rejects_bad_order(rng):
    batch = random_batch(rng)
    with pytest.raises(ConfigError):
        hybrid(batch, None, None, None, np.random.default_rng(0), order=("cam", "cdo"))


def test_hybrid_singleton_batch_skips_epm(rng):
    batch = random_batch(rng, size=1)
    out = hybrid(batch, None, None, EpmConfig(prob=1.0), np.random.default_rng(0))
    assert np.array_equal(out.pairs[0][0], batch.pairs[0][0])


def test_batch_validation(rng):
    with pytest.raises(InvariantError):
        Batch(pairs=[])
    img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
    with pytest.raises(InvariantError):
        Batch(pairs=[(img, np.zeros((8, 8), np.uint8)), (img, np.zeros((9, 8), np.uint8))])


# --- streaming --------------------------------------------------------------------------


def decode_stream(data: bytes):
    """Independent TSYN1 decoder used only by tests."""
    assert data[:5] == b"TSYN1"
    offset = 5
    batches = []
    while offset < len(data):
        epoch, batch_index, count = struct.unpack_from("<IIH", data, offset)
        offset += 10
        pairs = []
        for _ in range(count):
            w, h, channels = struct.unpack_from("<HHB", data, offset)
            offset += 5
            img = np.frombuffer(data, np.uint8, w * h * channels, offset).reshape(h, w, channels)
            offset += w * h * channels
            mask = np.frombuffer(data, np.uint8, w * h, offset).reshape(h, w)
            offset += w * h
            pairs.append((img, mask))
        batches.append((epoch, batch_index, pairs))
    return batches


def passthrough_cfg(batch_size, epochs, master_seed):
    return StreamConfig(
        batch_size=batch_size, epochs=epochs, master_seed=master_seed,
        cam=None, cdo=None, epm=None,
    )


def test_stream_partition_sizes(tiny_dataset):
    out_dir, _, _ = tiny_dataset
    cfg = passthrough_cfg(5, 1, 3)
    sink = io.BytesIO()
    count = stream_batches(out_dir / "manifest.json", cfg, sink)
    batches = decode_stream(sink.getvalue())
    assert count == 3
    assert [len(pairs) for _, _, pairs in batches] == [5, 5, 2]
    assert [b[1] for b in batches] == [0, 1, 2]


def test_stream_two_runs_byte_identical(tiny_dataset):
    out_dir, _, _ = tiny_dataset
    cfg = StreamConfig(batch_size=4, epochs=2, master_seed=11)
    a, b = io.BytesIO(), io.BytesIO()
    stream_batches(out_dir / "manifest.json", cfg, a)
    stream_batches(out_dir / "manifest.json", cfg, b)
    assert a.getvalue() == b.getvalue()


def test_stream_epochs_shuffle_differently(tiny_dataset):
    out_dir, _, _ = tiny_dataset
    cfg = passthrough_cfg(12, 2, 19)
    orders = []
    for batch, ids in iter_augmented_batches(out_dir / "manifest.json", cfg):
        orders.append(list(ids))
    assert len(orders) == 2
    assert orders[0] != orders[1]
    assert sorted(orders[0]) == sorted(orders[1]) == list(range(12))


def test_stream_pixels_match_source_when_passthrough(tiny_dataset):
    from toolsynth.imgcore import load_png

    out_dir, _, manifest = tiny_dataset
    cfg = passthrough_cfg(4, 1, 3)
    sink = io.BytesIO()
    stream_batches(out_dir / "manifest.json", cfg, sink)
    batches = decode_stream(sink.getvalue())
    ids = [
        ids for _, ids in iter_augmented_batches(out_dir / "manifest.json", cfg)
    ]
    for (_, _, pairs), id_list in zip(batches, ids):
        for (img, mask), sample_id in zip(pairs, id_list):
            disk_img = load_png(out_dir / f"images/{sample_id:06d}.png", "image")
            disk_mask = load_png(out_dir / f"masks/{sample_id:06d}.png", "mask")
            assert np.array_equal(img, disk_img)
            assert np.array_equal(mask, disk_mask)


def test_offline_matches_stream_bytes(tiny_dataset, tmp_path):
    from toolsynth.imgcore import load_png

    out_dir, _, _ = tiny_dataset
    cfg = StreamConfig(batch_size=4, epochs=1, master_seed=23)
    sink = io.BytesIO()
    stream_batches(out_dir / "manifest.json", cfg, sink)
    batches = decode_stream(sink.getvalue())
    manifest = write_augmented(out_dir / "manifest.json", cfg, tmp_path / "aug")
    flat = [(img, mask) for _, _, pairs in batches for img, mask in pairs]
    assert len(manifest["samples"]) == len(flat)
    for record, (img, mask) in zip(manifest["samples"], flat):
        disk_img = load_png(tmp_path / "aug" / record["image"], "image")
        disk_mask = load_png(tmp_path / "aug" / record["mask"], "mask")
        assert np.array_equal(disk_img, img)
        assert np.array_equal(disk_mask, mask)


def test_stream_config_validation():
    with pytest.raises(ConfigError):
        StreamConfig(batch_size=1, epochs=1, master_seed=0)  # EPM needs >= 2
    with pytest.raises(ConfigError):
        StreamConfig(batch_size=0, epochs=1, master_seed=0, epm=None)
    with pytest.raises(ConfigError):
        StreamConfig(batch_size=4, epochs=0, master_seed=0, epm=None)
    StreamConfig(batch_size=1, epochs=1, master_seed=0, epm=None)  # fine without EPM

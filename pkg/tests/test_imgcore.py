import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from toolsynth.errors import DataIOError, InvariantError
from toolsynth.imgcore import (
    load_png,
    mask_area,
    mask_union,
    quantize_u8,
    save_png,
)


def test_quantize_half_away_and_clamp():
    vals = np.array([0.4, 0.5, 1.5, -0.4, -0.6, 254.5, 255.2, 300.0, -5.0])
    out = quantize_u8(vals)
    assert out.tolist() == [0, 1, 2, 0, 0, 255, 255, 255, 0]
    assert out.dtype == np.uint8


def test_quantize_integers_pass_through():
    arr = np.arange(256, dtype=np.uint8)
    assert np.array_equal(quantize_u8(arr), arr)


def test_image_round_trip(tmp_path, rng):
    for channels in (3, 4):
        img = rng.integers(0, 256, (21, 17, channels), dtype=np.uint8)
        path = tmp_path / f"img{channels}.png"
        save_png(img, path)
        back = load_png(path, "image")
        assert np.array_equal(back, img)


def test_mask_round_trip_and_binarization_idempotent(tmp_path, rng):
    mask = (rng.random((33, 29)) < 0.4).astype(np.uint8)
    path = tmp_path / "m.png"
    save_png(mask, path)
    once = load_png(path, "mask")
    assert np.array_equal(once, mask)
    save_png(once, path)
    assert np.array_equal(load_png(path, "mask"), once)


def test_mask_threshold_128(tmp_path):
    gray = np.array([[0, 127, 128, 255]], dtype=np.uint8)
    path = tmp_path / "gray.png"
    Image.fromarray(gray, "L").save(path)
    assert load_png(path, "mask").tolist() == [[0, 0, 1, 1]]


def test_all_255_and_all_0_masks(tmp_path):
    path = tmp_path / "v.png"
    Image.fromarray(np.full((4, 4), 255, np.uint8), "L").save(path)
    assert np.array_equal(load_png(path, "mask"), np.ones((4, 4), np.uint8))
    Image.fromarray(np.zeros((4, 4), np.uint8), "L").save(path)
    assert np.array_equal(load_png(path, "mask"), np.zeros((4, 4), np.uint8))


def test_rgb_image_stays_rgb_and_gray_promotes(tmp_path):
    path = tmp_path / "x.png"
    Image.fromarray(np.zeros((5, 5, 3), np.uint8), "RGB").save(path)
    assert load_png(path, "image").shape == (5, 5, 3)
    Image.fromarray(np.zeros((5, 5), np.uint8), "L").save(path)
    assert load_png(path, "image").shape == (5, 5, 3)


def test_missing_file_reports_path(tmp_path):
    with pytest.raises(DataIOError, match="nope.png"):
        load_png(tmp_path / "nope.png", "image")


def test_non_8bit_png_rejected(tmp_path):
    # hand-rolled 4x4 16-bit grayscale PNG (PIL no longer writes them)
    import struct
    import zlib

    def chunk(tag, payload):
        data = tag + payload
        return struct.pack(">I", len(payload)) + data + struct.pack(">I", zlib.crc32(data))

    ihdr = struct.pack(">IIBBBBB", 4, 4, 16, 0, 0, 0, 0)
    raw = b"".join(b"\x00" + b"\x03\xe8" * 4 for _ in range(4))
    png = (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(raw))
        + chunk(b"IEND", b"")
    )
    path = tmp_path / "deep.png"
    path.write_bytes(png)
    with pytest.raises(DataIOError, match="deep.png"):
        load_png(path, "image")


def test_unwritable_path_reports_path(tmp_path):
    # parent is a regular file, so the directory cannot be created
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    with pytest.raises(DataIOError, match="out.png"):
        save_png(np.zeros((4, 4, 3), np.uint8), blocker / "out.png")


def test_mask_area_cases():
    assert mask_area(np.zeros((4, 4), np.uint8)) == 0
    assert mask_area(np.ones((4, 4), np.uint8)) == 16
    checker = np.indices((4, 4)).sum(axis=0) % 2
    assert mask_area(checker.astype(np.uint8)) == 8


def test_mask_union_identity_idempotent_disjoint():
    a = np.zeros((4, 6), np.uint8)
    a[:, :3] = 1
    zero = np.zeros_like(a)
    assert np.array_equal(mask_union(a, zero), a)
    assert np.array_equal(mask_union(a, a), a)
    b = 1 - a
    assert np.array_equal(mask_union(a, b), np.ones_like(a))


def test_mask_union_dimension_mismatch():
    with pytest.raises(InvariantError):
        mask_union(np.zeros((2, 2), np.uint8), np.zeros((3, 2), np.uint8))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
def test_union_area_subadditive(bits_a, bits_b):
    a = np.array([(bits_a >> i) & 1 for i in range(16)], np.uint8).reshape(4, 4)
    b = np.array([(bits_b >> i) & 1 for i in range(16)], np.uint8).reshape(4, 4)
    union = mask_union(a, b)
    assert mask_area(union) <= mask_area(a) + mask_area(b)
    disjoint = not np.any(a & b)
    assert (mask_area(union) == mask_area(a) + mask_area(b)) == disjoint

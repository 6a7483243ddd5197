import numpy as np
import pytest
from hypothesis import given, strategies as st

from locomp.augment import (
    apply_limited,
    hflip,
    limited_crop,
    limited_flip,
    random_crop,
    resize,
)
from locomp.compressors import compress_image, downgrade_area, matrix_for_spec
from locomp.config import CompressionSpec, LimitedAugmentParams
from locomp.errors import CropTooLargeError, DimensionMismatchError
from oracles import assert_close_rel


def _rng(seed=0):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _spec(method="percentile", m=7, n=2, **kw):
    kw.setdefault("crop_to", 224)
    kw.setdefault("resize_to", 256)
    kw.setdefault("mode", "inline")
    return CompressionSpec(method=method, block_size=m, target_size=n, **kw)


# --- full-suite transforms --------------------------------------------------


def test_resize_identity(rng):
    img = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
    assert np.array_equal(resize(img, 64), img)


def test_resize_constant_shrink():
    img = np.full((512, 512, 1), 37, dtype=np.uint8)
    out = resize(img, 256)
    assert out.shape == (256, 256, 1)
    assert (out == 37).all()


def test_resize_shrink_equals_area_downgrade(rng):
    img = rng.integers(0, 256, size=(512, 512, 3), dtype=np.uint8)
    assert np.array_equal(resize(img, 256), downgrade_area(img, (256, 256)))


def test_resize_upscale_bilinear_hand_case():
    row = np.array([[0.0, 2.0]], dtype=np.float32)
    out = resize(np.repeat(row, 2, axis=0), 4)
    # half-pixel centers: sample points -0.25, 0.25, 0.75, 1.25, clamped
    assert_close_rel(out[0], [0.0, 0.5, 1.5, 2.0], rel=1e-6)


def test_resize_rectangular_to_square(rng):
    img = rng.integers(0, 256, size=(100, 300, 3), dtype=np.uint8)
    out = resize(img, 128)  # height grows, width shrinks
    assert out.shape == (128, 128, 3)
    assert out.dtype == np.uint8


def test_random_crop_identity_and_determinism(rng):
    img = rng.integers(0, 256, size=(256, 256, 3), dtype=np.uint8)
    assert np.array_equal(random_crop(img, 256, _rng(1)), img)
    a = random_crop(img, 224, _rng(5))
    b = random_crop(img, 224, _rng(5))
    assert np.array_equal(a, b)
    assert a.shape == (224, 224, 3)


def test_random_crop_offsets_cover_range(rng):
    img = np.zeros((256, 256, 1), dtype=np.uint8)
    img[:, :, 0] = np.add.outer(np.arange(256), np.arange(256)) % 251
    gen = _rng(7)
    tops = set()
    for _ in range(400):
        window = random_crop(img, 224, gen)
        tops.add(int(window[0, 0, 0]))
    # offsets live in [0, 32]^2; with 400 draws we should see many corners
    assert len(tops) > 20


def test_random_crop_too_large():
    with pytest.raises(CropTooLargeError):
        random_crop(np.zeros((16, 16, 1), dtype=np.uint8), 17, _rng(0))


def test_hflip_basics():
    img = np.array([[[1], [2]]], dtype=np.uint8)
    assert hflip(img).tolist() == [[[2], [1]]]
    one_col = np.arange(8, dtype=np.uint8).reshape(8, 1, 1)
    assert np.array_equal(hflip(one_col), one_col)


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31))
def test_hflip_involution(h, w, seed):
    img = np.random.default_rng(seed).integers(0, 256, size=(h, w, 2), dtype=np.uint8)
    assert np.array_equal(hflip(hflip(img)), img)


# --- limited (compressed-domain) transforms ---------------------------------


def _compressed(rng, side=64, method="percentile", m=7, n=2, channels=3):
    img = rng.integers(0, 256, size=(side * m // n, side * m // n, channels))
    img = img.astype(np.uint8)
    spec = _spec(method=method, m=m, n=n, crop_to=side * m // n, resize_to=side * m // n)
    return compress_image(img, spec, matrix_for_spec(spec))


def test_limited_crop_identity(rng):
    cimg = _compressed(rng)  # 64x64, n=2, 32 blocks
    out = limited_crop(cimg, 32, _rng(3))
    assert np.array_equal(out.pixels, cimg.pixels)


def test_limited_crop_offsets_are_block_aligned(rng):
    cimg = _compressed(rng)
    gen = _rng(11)
    seen = set()
    for _ in range(300):
        out = limited_crop(cimg, 28, gen)
        assert out.pixels.shape == (56, 56, 3)
        # locate the window by matching its first row against the source
        for row in range(0, 18, 2):
            for col in range(0, 18, 2):
                if np.array_equal(
                    cimg.pixels[row : row + 56, col : col + 56], out.pixels
                ):
                    seen.add((row, col))
    assert seen <= {(r, c) for r in range(0, 18, 2) for c in range(0, 18, 2)}
    assert len(seen) > 10


def test_limited_crop_too_large(rng):
    cimg = _compressed(rng)
    with pytest.raises(CropTooLargeError):
        limited_crop(cimg, 33, _rng(0))


def test_limited_flip_block_columns(rng):
    # width 4, n=2: columns [a b c d] -> [c d a b]
    cimg = _compressed(rng, side=4, m=4, n=2, channels=1)
    flipped = limited_flip(cimg)
    assert np.array_equal(flipped.pixels[:, 0:2], cimg.pixels[:, 2:4])
    assert np.array_equal(flipped.pixels[:, 2:4], cimg.pixels[:, 0:2])
    assert np.array_equal(limited_flip(flipped).pixels, cimg.pixels)


def test_limited_flip_single_block_is_identity(rng):
    img = rng.integers(0, 256, size=(7, 7, 1), dtype=np.uint8)
    spec = _spec(crop_to=7, resize_to=7)
    cimg = compress_image(img, spec)
    assert np.array_equal(limited_flip(cimg).pixels, cimg.pixels)


def test_apply_limited_param_check(rng):
    cimg = _compressed(rng)
    with pytest.raises(DimensionMismatchError):
        apply_limited(cimg, LimitedAugmentParams(target_size=4), _rng(0))


def test_apply_limited_closure(rng):
    cimg = _compressed(rng)
    params = LimitedAugmentParams(crop_blocks=28, flip_prob=1.0)
    out = apply_limited(cimg, params, _rng(5))
    assert out.target_size == cimg.target_size
    assert out.height % out.target_size == 0
    assert out.width % out.target_size == 0


# --- commutation with compression -------------------------------------------


def test_percentile_flip_commutes_exactly(rng):
    img = rng.integers(0, 256, size=(28, 28, 3), dtype=np.uint8)
    spec = _spec(crop_to=28, resize_to=28)
    lhs = compress_image(hflip(img), spec)
    rhs = limited_flip(compress_image(img, spec))
    assert np.array_equal(lhs.pixels, rhs.pixels)


@pytest.mark.parametrize("method", ["percentile", "rmm", "ms", "downgrade"])
def test_block_aligned_crop_commutes(method, rng):
    spec = _spec(method=method, crop_to=28, resize_to=28)
    matrix = matrix_for_spec(spec)
    img = rng.integers(0, 256, size=(42, 42, 2), dtype=np.uint8)
    big_spec = _spec(method=method, crop_to=42, resize_to=42)
    whole = compress_image(img, big_spec, matrix)
    # crop 4x4 blocks starting at block (1, 2): pixels (7, 14) / (2, 4)
    window = img[7 : 7 + 28, 14 : 14 + 28]
    direct = compress_image(window, spec, matrix)
    via_compressed = whole.pixels[2 : 2 + 8, 4 : 4 + 8]
    if direct.pixels.dtype == np.uint8:
        assert np.array_equal(direct.pixels, via_compressed)
    else:
        assert_close_rel(direct.pixels, via_compressed, rel=1e-6)

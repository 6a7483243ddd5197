"""Data augmentation, in two flavours.

The full suite operates on uncompressed images (resize, random square crop,
left-right flip). The limited suite operates on compressed images and is
constrained to never split a compressed block: crops land on block
boundaries and flips reverse whole block columns while leaving each block's
internal layout untouched.
"""

from __future__ import annotations

import numpy as np

from .compressors import CompressedImage, _resample2d
from .config import AugmentParams, LimitedAugmentParams
from .errors import CropTooLargeError, DimensionMismatchError, ValidationError


def resize(image, side: int) -> np.ndarray:
    """Resample an image to side x side: area averaging when an axis
    shrinks, linear interpolation when it grows. Preserves dtype."""
    if side < 1:
        raise ValidationError(f"side must be >= 1, got {side}")
    arr = np.asarray(image)
    if arr.ndim not in (2, 3):
        raise DimensionMismatchError(f"image must be 2-D or 3-D, got shape {arr.shape}")
    return _resample2d(arr, side, side)


def random_crop(image, size: int, rng: np.random.Generator) -> np.ndarray:
    """Contiguous size x size window at a uniformly random offset.

    Draw order: row offset, then column offset; both draws happen even when
    only one position is possible, so callers' streams stay aligned.
    """
    arr = np.asarray(image)
    if size < 1:
        raise ValidationError(f"crop size must be >= 1, got {size}")
    if size > arr.shape[0] or size > arr.shape[1]:
        raise CropTooLargeError(
            f"crop {size}x{size} does not fit in {arr.shape[0]}x{arr.shape[1]}"
        )
    row = int(rng.integers(arr.shape[0] - size + 1))
    col = int(rng.integers(arr.shape[1] - size + 1))
    return np.ascontiguousarray(arr[row : row + size, col : col + size])


def hflip(image) -> np.ndarray:
    """Reverse column order, all channels alike."""
    arr = np.asarray(image)
    return np.ascontiguousarray(arr[:, ::-1])


def crop_and_flip(image, crop_to: int, flip_prob: float, rng: np.random.Generator):
    """Random crop then coin-flip mirror, with a fixed draw order (row
    offset, column offset, flip coin) regardless of parameter values."""
    out = random_crop(image, crop_to, rng)
    if rng.random() < flip_prob:
        out = hflip(out)
    return out


def apply_full(image, params: AugmentParams, rng: np.random.Generator | None = None):
    """Resize then crop_and_flip; rng defaults to a stream seeded from params."""
    if rng is None:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(params.rng_seed)))
    return crop_and_flip(resize(image, params.resize_to), params.crop_to, params.flip_prob, rng)


def limited_crop(
    cimg: CompressedImage, crop_blocks: int, rng: np.random.Generator
) -> CompressedImage:
    """Block-aligned square crop of a compressed image.

    The window side is crop_blocks whole blocks; offsets are drawn
    uniformly from the multiples of the block side. Draw order matches
    random_crop: row offset then column offset, always both.
    """
    if crop_blocks < 1:
        raise ValidationError(f"crop_blocks must be >= 1, got {crop_blocks}")
    if crop_blocks > cimg.blocks_down or crop_blocks > cimg.blocks_across:
        raise CropTooLargeError(
            f"crop of {crop_blocks} blocks does not fit in "
            f"{cimg.blocks_down}x{cimg.blocks_across} blocks"
        )
    n = cimg.target_size
    row = int(rng.integers(cimg.blocks_down - crop_blocks + 1)) * n
    col = int(rng.integers(cimg.blocks_across - crop_blocks + 1)) * n
    side = crop_blocks * n
    window = cimg.pixels[row : row + side, col : col + side]
    return cimg.with_pixels(np.ascontiguousarray(window))


def limited_flip(cimg: CompressedImage) -> CompressedImage:
    """Reverse the order of block columns without touching block interiors."""
    n = cimg.target_size
    h, w, c = cimg.pixels.shape
    blocks = cimg.pixels.reshape(h, w // n, n, c)
    flipped = blocks[:, ::-1].reshape(h, w, c)
    return cimg.with_pixels(np.ascontiguousarray(flipped))


def apply_limited(
    cimg: CompressedImage,
    params: LimitedAugmentParams,
    rng: np.random.Generator,
) -> CompressedImage:
    """Optional block-aligned crop, then coin-flip block-order mirror.

    Draw order: crop offsets (only when a crop is configured), then the
    flip coin (always).
    """
    if params.target_size is not None and params.target_size != cimg.target_size:
        raise DimensionMismatchError(
            f"params expect block side {params.target_size}, "
            f"image has {cimg.target_size}"
        )
    out = cimg
    if params.crop_blocks is not None:
        out = limited_crop(out, params.crop_blocks, rng)
    if rng.random() < params.flip_prob:
        out = limited_flip(out)
    return out

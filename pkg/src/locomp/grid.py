"""Block-tiling arithmetic: tiling plans, compressed sizes, storage ratios,
and CNN stride-compatibility checks.

All operations here are pure functions on immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidBlockSizesError, NonDivisibleError, ValidationError

# Number of convolutional-region offsets enumerated as evidence in a
# compatibility report; enumeration is cheap and makes the verdict
# checkable rather than formula-trusting.
DEFAULT_OFFSET_COUNT = 64


@dataclass(frozen=True)
class ImageDims:
    """Height x width x channels of a dense pixel grid."""

    height: int
    width: int
    channels: int = 1

    def __post_init__(self) -> None:
        for name in ("height", "width", "channels"):
            value = getattr(self, name)
            if value < 1:
                raise ValidationError(f"{name} must be >= 1, got {value}")

    @property
    def pixels(self) -> int:
        return self.height * self.width * self.channels


@dataclass(frozen=True)
class TilingPlan:
    """An exact, non-overlapping tiling of an image into square blocks."""

    block_size: int
    blocks_down: int
    blocks_across: int

    @property
    def block_count(self) -> int:
        return self.blocks_down * self.blocks_across


@dataclass(frozen=True)
class ConvArch:
    """First-layer geometry of a CNN: region side and stride in pixels."""

    region: int
    stride: int

    def __post_init__(self) -> None:
        if self.region < 1 or self.stride < 1:
            raise ValidationError("region and stride must be >= 1")
        if self.stride > self.region:
            raise ValidationError(
                f"stride={self.stride} must not exceed region={self.region}"
            )


@dataclass(frozen=True)
class CompatReport:
    """Whether compressed blocks line up with a CNN's convolutional walk.

    stride_ok: the stride is a multiple of the compressed block side, so
    every region left edge lands on a block boundary. region_ok: the region
    side itself is a multiple of the block side, so regions cover whole
    blocks. offsets lists the first enumerated region left-edge offsets as
    (offset, offset_is_block_aligned) evidence pairs.
    """

    target_size: int
    stride_ok: bool
    region_ok: bool
    offsets: tuple[tuple[int, bool], ...]


def plan_tiling(dims: ImageDims, block_size: int) -> TilingPlan:
    """Tile dims into block_size x block_size blocks with no overlap.

    Raises NonDivisibleError when either dimension is not an exact multiple
    of block_size; callers are expected to resize first rather than rely on
    implicit padding.
    """
    if block_size < 1:
        raise ValidationError(f"block_size must be >= 1, got {block_size}")
    if dims.height % block_size or dims.width % block_size:
        raise NonDivisibleError(
            f"{dims.height}x{dims.width} image is not an exact multiple of "
            f"block_size={block_size}; resize before tiling"
        )
    return TilingPlan(
        block_size=block_size,
        blocks_down=dims.height // block_size,
        blocks_across=dims.width // block_size,
    )


def _require_shrinking(block_size: int, target_size: int) -> None:
    if block_size < 1 or not 1 <= target_size < block_size:
        raise InvalidBlockSizesError(
            f"need 1 <= target_size < block_size, got "
            f"target_size={target_size}, block_size={block_size}"
        )


def compressed_dims(dims: ImageDims, block_size: int, target_size: int) -> ImageDims:
    """Dimensions after compressing each block to target_size x target_size."""
    _require_shrinking(block_size, target_size)
    plan = plan_tiling(dims, block_size)
    return ImageDims(
        height=plan.blocks_down * target_size,
        width=plan.blocks_across * target_size,
        channels=dims.channels,
    )


def compression_ratios(
    block_size: int, target_size: int, copies: int = 1
) -> tuple[Fraction, Fraction]:
    """Computational and storage ratios, uncompressed over compressed.

    The computational ratio is block_size^2 / target_size^2; the storage
    ratio divides that by the number of stored copies. Returned as exact
    fractions so callers can do integer-exact bookkeeping.
    """
    _require_shrinking(block_size, target_size)
    if copies < 1:
        raise ValidationError(f"copies must be >= 1, got {copies}")
    computational = Fraction(block_size * block_size, target_size * target_size)
    return computational, computational / copies


def check_stride_compat(
    arch: ConvArch, target_size: int, offset_count: int = DEFAULT_OFFSET_COUNT
) -> CompatReport:
    """Report whether a conv walk consumes whole compressed blocks.

    Enumerates the first offset_count region left-edge offsets (multiples
    of the stride) and marks each as block-aligned or not.
    """
    if target_size < 1:
        raise ValidationError(f"target_size must be >= 1, got {target_size}")
    if offset_count < 1:
        raise ValidationError(f"offset_count must be >= 1, got {offset_count}")
    offsets = tuple(
        (i * arch.stride, (i * arch.stride) % target_size == 0)
        for i in range(offset_count)
    )
    return CompatReport(
        target_size=target_size,
        stride_ok=arch.stride % target_size == 0,
        region_ok=arch.region % target_size == 0,
        offsets=offsets,
    )

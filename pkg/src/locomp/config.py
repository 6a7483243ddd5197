"""Run configuration dataclasses shared by the compressors and the pipeline."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields

from .errors import (
    CropTooLargeError,
    InvalidBlockSizesError,
    NonDivisibleError,
    ValidationError,
)

METHODS = ("percentile", "rmm", "ms", "downgrade")
MODES = ("inline", "default")

# Seeds are persisted as unsigned 64-bit integers.
MAX_SEED = 2**64 - 1


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must be in [0, 1], got {value!r}")


@dataclass(frozen=True)
class CompressionSpec:
    """Parameters governing one compression run.

    Each block_size x block_size tile of a source channel shrinks to
    target_size x target_size. density is the expected fraction of nonzero
    sketch-matrix entries; seed drives both matrix generation and the
    per-image augmentation streams. resize_to / crop_to / flip_prob
    configure the full augmentation suite applied before compression, and
    copies is the number of independently augmented compressed copies kept
    per source image in default mode.
    """

    method: str
    block_size: int
    target_size: int
    density: float = 1.0
    seed: int = 0
    resize_to: int = 256
    crop_to: int = 224
    copies: int = 1
    mode: str = "default"
    flip_prob: float = 0.5

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValidationError(
                f"method must be one of {METHODS}, got {self.method!r}"
            )
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.block_size < 1 or not 1 <= self.target_size < self.block_size:
            raise InvalidBlockSizesError(
                f"need 1 <= target_size < block_size, got "
                f"target_size={self.target_size}, block_size={self.block_size}"
            )
        _check_probability("density", self.density)
        _check_probability("flip_prob", self.flip_prob)
        if not 0 <= self.seed <= MAX_SEED:
            raise ValidationError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.copies < 1:
            raise ValidationError(f"copies must be >= 1, got {self.copies}")
        if self.resize_to < 1 or self.crop_to < 1:
            raise ValidationError("resize_to and crop_to must be >= 1")
        if self.crop_to > self.resize_to:
            raise CropTooLargeError(
                f"crop_to={self.crop_to} exceeds resize_to={self.resize_to}"
            )
        if self.crop_to % self.block_size:
            raise NonDivisibleError(
                f"crop_to={self.crop_to} is not a multiple of "
                f"block_size={self.block_size}; cropped images must tile exactly"
            )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "CompressionSpec":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValidationError(f"unknown CompressionSpec fields: {sorted(unknown)}")
        return cls(**data)

    def digest(self) -> bytes:
        """SHA-256 over the canonical JSON encoding of the spec fields."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).digest()

    def digest_hex(self) -> str:
        return self.digest().hex()


@dataclass(frozen=True)
class AugmentParams:
    """Full augmentation suite: resize, random square crop, coin-flip mirror."""

    resize_to: int
    crop_to: int
    flip_prob: float = 0.5
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.resize_to < 1 or self.crop_to < 1:
            raise ValidationError("resize_to and crop_to must be >= 1")
        if self.crop_to > self.resize_to:
            raise CropTooLargeError(
                f"crop_to={self.crop_to} exceeds resize_to={self.resize_to}"
            )
        _check_probability("flip_prob", self.flip_prob)

    @classmethod
    def from_spec(cls, spec: CompressionSpec) -> "AugmentParams":
        return cls(
            resize_to=spec.resize_to,
            crop_to=spec.crop_to,
            flip_prob=spec.flip_prob,
            rng_seed=spec.seed,
        )


@dataclass(frozen=True)
class LimitedAugmentParams:
    """Compressed-domain augmentation: block-aligned crop, block-order flip.

    crop_blocks is the target side measured in compressed blocks; None
    disables the runtime crop. target_size, when given, is checked against
    the block side recorded in the compressed image being augmented.
    """

    crop_blocks: int | None = None
    flip_prob: float = 0.5
    rng_seed: int = 0
    target_size: int | None = None

    def __post_init__(self) -> None:
        if self.crop_blocks is not None and self.crop_blocks < 1:
            raise ValidationError(f"crop_blocks must be >= 1, got {self.crop_blocks}")
        if self.target_size is not None and self.target_size < 1:
            raise ValidationError(f"target_size must be >= 1, got {self.target_size}")
        _check_probability("flip_prob", self.flip_prob)

"""Block-level compression kernels and the whole-image compressor.

Four methods are implemented: percentile sampling (order statistics of each
block), random matrix multiplication (vectorize and left-multiply), matrix
sketching (two-sided multiply), and area-average downgrading as the
baseline. A feasibility predicate for PCA-in-a-block is included only to
show why PCA is not among them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import CompressionSpec, MAX_SEED
from .errors import (
    DimensionMismatchError,
    InvalidBlockSizesError,
    UpscaleNotSupportedError,
    ValidationError,
)
from .grid import ImageDims, plan_tiling

ZERO_DIGEST = bytes(32)

MATRIX_KINDS = ("rmm", "ms")

#: dtypes a compressed image may carry; everything else is rejected up front.
SUPPORTED_DTYPES = (np.dtype(np.uint8), np.dtype(np.float32))


def pca_feasible(block_size: int, target_size: int, components: int) -> bool:
    """Whether `components` principal components of a block fit in the
    compressed block.

    Storing P components of a block with side m takes 2*m*P + m parameters
    (P eigenvectors, P coefficient rows, and the pixel means), which must
    not exceed the target_size**2 slots available.
    """
    if block_size < 1 or target_size < 1 or components < 1:
        raise ValidationError("block_size, target_size, components must be >= 1")
    return target_size * target_size >= 2 * block_size * components + block_size


@dataclass(frozen=True)
class PercentileScheme:
    """Ascending quantiles sampled from each block, placed row-major.

    The first/last quantile must be 0/1 whenever there are at least two, so
    block minima and maxima always survive compression.
    """

    quantiles: tuple[float, ...]

    def __post_init__(self) -> None:
        q = self.quantiles
        if not q:
            raise ValidationError("scheme needs at least one quantile")
        if any(not 0.0 <= v <= 1.0 for v in q):
            raise ValidationError("quantiles must lie in [0, 1]")
        if any(b < a for a, b in zip(q, q[1:])):
            raise ValidationError("quantiles must be ascending")
        if len(q) >= 2 and (q[0] != 0.0 or q[-1] != 1.0):
            raise ValidationError(
                "schemes with >= 2 quantiles must start at 0 and end at 1"
            )

    @property
    def output_side(self) -> int:
        side = math.isqrt(len(self.quantiles))
        if side * side != len(self.quantiles):
            raise DimensionMismatchError(
                f"{len(self.quantiles)} quantiles do not fill a square block"
            )
        return side


def make_percentile_scheme(target_size: int) -> PercentileScheme:
    """Evenly spaced quantiles k/(count-1) filling a target block.

    A single-cell target keeps the median; larger targets always include
    the minimum (quantile 0) and maximum (quantile 1).
    """
    if target_size < 1:
        raise ValidationError(f"target_size must be >= 1, got {target_size}")
    count = target_size * target_size
    if count == 1:
        return PercentileScheme((0.5,))
    return PercentileScheme(tuple(k / (count - 1) for k in range(count)))


def _order_statistic_indices(quantiles: tuple[float, ...], count: int) -> np.ndarray:
    # Nearest rank with round-half-even, on index q*(count-1). Keeps the
    # "outputs are samples of the input" property exact for every dtype.
    idx = np.rint(np.asarray(quantiles, dtype=np.float64) * (count - 1))
    return idx.astype(np.int64)


def _as_square_block(block) -> np.ndarray:
    arr = np.asarray(block)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"block must be square 2-D, got shape {arr.shape}")
    return arr


def compress_block_percentile(block, scheme: PercentileScheme) -> np.ndarray:
    """Sample a block's order statistics at the scheme's quantiles.

    Output cell k (row-major) holds the sorted block value at nearest-rank
    index round(q_k * (m^2 - 1)); every output value is a member of the
    input multiset and the input dtype is preserved.
    """
    arr = _as_square_block(block)
    side = scheme.output_side
    if arr.shape[0] < side:
        raise InvalidBlockSizesError(
            f"block side {arr.shape[0]} is smaller than output side {side}"
        )
    ranked = np.sort(arr, axis=None)
    idx = _order_statistic_indices(scheme.quantiles, arr.size)
    return ranked[idx].reshape(side, side)


@dataclass(frozen=True, eq=False)
class SketchMatrix:
    """A persisted sparse-Gaussian projection matrix.

    kind "rmm" matrices act on vectorized blocks (rows = target^2,
    cols = block^2); kind "ms" matrices act two-sided (rows = target,
    cols = block). density is the expected fraction of nonzero entries.
    The stored entries, not the seed, are authoritative: the seed is kept
    only as provenance.
    """

    kind: str
    entries: np.ndarray = field(repr=False)
    density: float = 1.0
    seed: int = 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, SketchMatrix):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.density == other.density
            and self.seed == other.seed
            and np.array_equal(self.entries, other.entries)
        )

    def __post_init__(self) -> None:
        if self.kind not in MATRIX_KINDS:
            raise ValidationError(f"kind must be one of {MATRIX_KINDS}, got {self.kind!r}")
        arr = np.asarray(self.entries, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatchError(f"entries must be 2-D, got shape {arr.shape}")
        if self.kind == "rmm":
            for axis, count in zip(("rows", "cols"), arr.shape):
                if math.isqrt(count) ** 2 != count:
                    raise DimensionMismatchError(
                        f"rmm {axis}={count} is not a perfect square"
                    )
        if not 0.0 <= self.density <= 1.0:
            raise ValidationError(f"density must be in [0, 1], got {self.density}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValidationError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


def gen_sketch_matrix(
    rows: int, cols: int, density: float = 1.0, seed: int = 0, kind: str = "rmm"
) -> SketchMatrix:
    """Draw a rows x cols matrix with iid entries: zero with probability
    1 - density, otherwise Gaussian with mean 0 and variance 1/(rows*cols).

    Stream contract: a counter-based Philox generator keyed by `seed` draws
    the keep-mask uniforms first, then the Gaussian values. Reproducing a
    run should nonetheless always go through the persisted matrix rather
    than re-deriving it from the seed.
    """
    if rows < 1 or cols < 1:
        raise ValidationError(f"rows and cols must be >= 1, got {rows}x{cols}")
    if not 0.0 <= density <= 1.0:
        raise ValidationError(f"density must be in [0, 1], got {density}")
    if not 0 <= seed <= MAX_SEED:
        raise ValidationError(f"seed must fit in 64 unsigned bits, got {seed}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    keep = rng.random(size=(rows, cols)) < density
    scale = 1.0 / math.sqrt(rows * cols)
    values = rng.normal(0.0, scale, size=(rows, cols))
    entries = np.where(keep, values, 0.0).astype(np.float32)
    return SketchMatrix(kind=kind, entries=entries, density=density, seed=seed)


def matrix_for_spec(spec: CompressionSpec) -> SketchMatrix | None:
    """The single shared matrix a spec needs, or None for matrix-free methods."""
    if spec.method == "rmm":
        return gen_sketch_matrix(
            rows=spec.target_size**2,
            cols=spec.block_size**2,
            density=spec.density,
            seed=spec.seed,
            kind="rmm",
        )
    if spec.method == "ms":
        return gen_sketch_matrix(
            rows=spec.target_size,
            cols=spec.block_size,
            density=spec.density,
            seed=spec.seed,
            kind="ms",
        )
    return None


def compress_block_rmm(block, mat: SketchMatrix) -> np.ndarray:
    """Left-multiply the row-major vectorized block by an rmm matrix and
    reshape the result row-major to a square float32 block."""
    arr = _as_square_block(block)
    if mat.kind != "rmm":
        raise DimensionMismatchError(f"expected an rmm matrix, got kind={mat.kind!r}")
    if mat.cols != arr.size:
        raise DimensionMismatchError(
            f"matrix has {mat.cols} columns but the block has {arr.size} pixels"
        )
    side = math.isqrt(mat.rows)
    vec = arr.reshape(-1).astype(np.float64)
    out = mat.entries.astype(np.float64) @ vec
    return out.reshape(side, side).astype(np.float32)


def compress_block_ms(block, mat: SketchMatrix) -> np.ndarray:
    """Two-sided sketch: matrix @ block @ matrix.T, as float32."""
    arr = _as_square_block(block)
    if mat.kind != "ms":
        raise DimensionMismatchError(f"expected an ms matrix, got kind={mat.kind!r}")
    if mat.cols != arr.shape[0]:
        raise DimensionMismatchError(
            f"matrix has {mat.cols} columns but the block side is {arr.shape[0]}"
        )
    m64 = mat.entries.astype(np.float64)
    out = m64 @ arr.astype(np.float64) @ m64.T
    return out.astype(np.float32)


# --- area / linear resampling -------------------------------------------------

def _axis_area_weights(n_out: int, n_in: int) -> np.ndarray:
    """Row-stochastic (n_out, n_in) matrix averaging source-pixel areas.

    Boundaries are computed on an integer grid of n_out * n_in subunits, so
    the overlap lengths are exact; only the final normalization divides.
    """
    weights = np.zeros((n_out, n_in), dtype=np.float64)
    for k in range(n_out):
        lo, hi = k * n_in, (k + 1) * n_in
        first = lo // n_out
        last = min((hi + n_out - 1) // n_out, n_in)
        for i in range(first, last):
            overlap = min(hi, (i + 1) * n_out) - max(lo, i * n_out)
            if overlap > 0:
                weights[k, i] = overlap / n_in
    return weights


def _axis_linear_weights(n_out: int, n_in: int) -> np.ndarray:
    """(n_out, n_in) linear-interpolation matrix, half-pixel-center convention."""
    weights = np.zeros((n_out, n_in), dtype=np.float64)
    for k in range(n_out):
        x = (k + 0.5) * n_in / n_out - 0.5
        x = min(max(x, 0.0), n_in - 1.0)
        i0 = int(math.floor(x))
        i1 = min(i0 + 1, n_in - 1)
        t = x - i0
        weights[k, i0] += 1.0 - t
        weights[k, i1] += t
    return weights


def _cast_back(values: np.ndarray, dtype: np.dtype) -> np.ndarray:
    if np.issubdtype(dtype, np.integer):
        info = np.iinfo(dtype)
        return np.clip(np.rint(values), info.min, info.max).astype(dtype)
    return values.astype(dtype)


def _resample2d(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable resample of an (H, W[, C]) array: area averaging on axes
    that shrink, linear interpolation on axes that grow. Preserves dtype;
    integer inputs round half to even."""
    squeeze = image.ndim == 2
    arr = image[:, :, None] if squeeze else image
    in_h, in_w = arr.shape[:2]

    if out_h <= in_h and out_w <= in_w and in_h % out_h == 0 and in_w % out_w == 0:
        # Integer shrink: exactly the block mean. Integer sums stay exact,
        # so the single final division is correctly rounded.
        fh, fw = in_h // out_h, in_w // out_w
        acc = np.int64 if np.issubdtype(arr.dtype, np.integer) else np.float64
        sums = arr.reshape(out_h, fh, out_w, fw, -1).sum(axis=(1, 3), dtype=acc)
        out = sums / (fh * fw)
    else:
        def axis_weights(n_out, n_in):
            if n_out == n_in:
                return None
            if n_out < n_in:
                return _axis_area_weights(n_out, n_in)
            return _axis_linear_weights(n_out, n_in)

        out = arr.astype(np.float64)
        w_h = axis_weights(out_h, in_h)
        w_w = axis_weights(out_w, in_w)
        if w_h is not None:
            out = np.tensordot(w_h, out, axes=(1, 0))
        if w_w is not None:
            out = np.moveaxis(np.tensordot(w_w, out, axes=(1, 1)), 0, 1)

    out = _cast_back(out, arr.dtype)
    return out[:, :, 0] if squeeze else out


def downgrade_area(image, target: ImageDims | tuple[int, int]) -> np.ndarray:
    """Pixel-area-weighted average shrink of an (H, W[, C]) image.

    Each output pixel is the mean of the source area it covers; for integer
    shrink factors this is exactly the block mean. Upscaling is refused.
    """
    arr = np.asarray(image)
    if arr.ndim not in (2, 3):
        raise DimensionMismatchError(f"image must be 2-D or 3-D, got shape {arr.shape}")
    out_h, out_w = (target.height, target.width) if isinstance(target, ImageDims) else target
    if out_h < 1 or out_w < 1:
        raise ValidationError(f"target dims must be >= 1, got {out_h}x{out_w}")
    if out_h > arr.shape[0] or out_w > arr.shape[1]:
        raise UpscaleNotSupportedError(
            f"target {out_h}x{out_w} exceeds source {arr.shape[0]}x{arr.shape[1]}"
        )
    return _resample2d(arr, out_h, out_w)


# --- whole-image compression ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class CompressedImage:
    """A grid of compressed blocks per channel, plus provenance.

    pixels is (height, width, channels) with both spatial dims multiples of
    target_size; block (i, j) of a channel occupies the target_size-sided
    window at (i, j) in block coordinates, mirroring the source layout.
    """

    method: str
    block_size: int
    target_size: int
    pixels: np.ndarray = field(repr=False)
    spec_digest: bytes = ZERO_DIGEST

    def __eq__(self, other) -> bool:
        if not isinstance(other, CompressedImage):
            return NotImplemented
        return (
            self.method == other.method
            and self.block_size == other.block_size
            and self.target_size == other.target_size
            and self.spec_digest == other.spec_digest
            and self.pixels.dtype == other.pixels.dtype
            and np.array_equal(self.pixels, other.pixels)
        )

    def __post_init__(self) -> None:
        if self.method not in ("percentile", "rmm", "ms", "downgrade"):
            raise ValidationError(f"unknown method {self.method!r}")
        if self.block_size < 1 or not 1 <= self.target_size < self.block_size:
            raise InvalidBlockSizesError(
                f"need 1 <= target_size < block_size, got "
                f"target_size={self.target_size}, block_size={self.block_size}"
            )
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise DimensionMismatchError(f"pixels must be 2-D or 3-D, got {arr.shape}")
        if arr.dtype not in SUPPORTED_DTYPES:
            raise ValidationError(f"pixels dtype must be uint8 or float32, got {arr.dtype}")
        if arr.shape[0] % self.target_size or arr.shape[1] % self.target_size:
            raise DimensionMismatchError(
                f"pixel dims {arr.shape[:2]} are not multiples of "
                f"target_size={self.target_size}"
            )
        if len(self.spec_digest) != 32:
            raise ValidationError("spec_digest must be 32 bytes")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def blocks_down(self) -> int:
        return self.height // self.target_size

    @property
    def blocks_across(self) -> int:
        return self.width // self.target_size

    @property
    def dims(self) -> ImageDims:
        return ImageDims(self.height, self.width, self.channels)

    def with_pixels(self, pixels: np.ndarray) -> "CompressedImage":
        return CompressedImage(
            method=self.method,
            block_size=self.block_size,
            target_size=self.target_size,
            pixels=pixels,
            spec_digest=self.spec_digest,
        )


def _tiles(channel: np.ndarray, block_size: int) -> np.ndarray:
    h, w = channel.shape
    return channel.reshape(
        h // block_size, block_size, w // block_size, block_size
    ).swapaxes(1, 2)


def _untile(blocks: np.ndarray) -> np.ndarray:
    bd, ba, n, _ = blocks.shape
    return blocks.swapaxes(1, 2).reshape(bd * n, ba * n)


def _percentile_channel(channel, m, idx, n):
    flat = np.ascontiguousarray(_tiles(channel, m)).reshape(-1, m * m)
    ranked = np.sort(flat, axis=-1)
    picked = ranked[:, idx]
    bd, ba = channel.shape[0] // m, channel.shape[1] // m
    return _untile(picked.reshape(bd, ba, n, n))


def _rmm_channel(channel, m, mat64, n):
    flat = np.ascontiguousarray(_tiles(channel, m)).reshape(-1, m * m)
    out = flat.astype(np.float64) @ mat64.T
    bd, ba = channel.shape[0] // m, channel.shape[1] // m
    return _untile(out.reshape(bd, ba, n, n))


def _two_sided_channel(channel, m, mat64):
    blocks = np.ascontiguousarray(_tiles(channel, m)).astype(np.float64)
    out = np.matmul(np.matmul(mat64, blocks), mat64.T)
    return _untile(out)


def compress_image(
    image,
    spec: CompressionSpec,
    matrix: SketchMatrix | None = None,
    scheme: PercentileScheme | None = None,
) -> CompressedImage:
    """Compress every block of every channel of an image under one spec.

    Channels are processed independently; block (i, j) of channel k maps to
    compressed block (i, j) of channel k, and the same matrix (or scheme)
    is shared by every block. Image dims must tile exactly by
    spec.block_size.
    """
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DimensionMismatchError(f"image must be 2-D or 3-D, got shape {arr.shape}")
    if arr.dtype not in SUPPORTED_DTYPES:
        raise ValidationError(f"image dtype must be uint8 or float32, got {arr.dtype}")

    m, n = spec.block_size, spec.target_size
    plan_tiling(ImageDims(arr.shape[0], arr.shape[1], arr.shape[2]), m)

    if spec.method == "percentile":
        scheme = scheme or make_percentile_scheme(n)
        if scheme.output_side != n:
            raise DimensionMismatchError(
                f"scheme fills a {scheme.output_side}-sided block, spec wants {n}"
            )
        idx = _order_statistic_indices(scheme.quantiles, m * m)
        chans = [_percentile_channel(arr[:, :, k], m, idx, n) for k in range(arr.shape[2])]
        out = np.stack(chans, axis=-1)
    elif spec.method == "downgrade":
        weights = _axis_area_weights(n, m)
        chans = [_two_sided_channel(arr[:, :, k], m, weights) for k in range(arr.shape[2])]
        out = _cast_back(np.stack(chans, axis=-1), arr.dtype)
    elif spec.method in ("rmm", "ms"):
        if matrix is None:
            raise DimensionMismatchError(f"method {spec.method!r} requires a matrix")
        if matrix.kind != spec.method:
            raise DimensionMismatchError(
                f"matrix kind {matrix.kind!r} does not match method {spec.method!r}"
            )
        mat64 = matrix.entries.astype(np.float64)
        if spec.method == "rmm":
            if matrix.cols != m * m or matrix.rows != n * n:
                raise DimensionMismatchError(
                    f"rmm matrix must be {n * n}x{m * m}, got {matrix.rows}x{matrix.cols}"
                )
            chans = [_rmm_channel(arr[:, :, k], m, mat64, n) for k in range(arr.shape[2])]
        else:
            if matrix.cols != m or matrix.rows != n:
                raise DimensionMismatchError(
                    f"ms matrix must be {n}x{m}, got {matrix.rows}x{matrix.cols}"
                )
            chans = [_two_sided_channel(arr[:, :, k], m, mat64) for k in range(arr.shape[2])]
        out = np.stack(chans, axis=-1).astype(np.float32)
    else:  # pragma: no cover - spec validation forbids this
        raise ValidationError(f"unknown method {spec.method!r}")

    return CompressedImage(
        method=spec.method,
        block_size=m,
        target_size=n,
        pixels=out,
        spec_digest=spec.digest(),
    )

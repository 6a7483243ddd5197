"""Network-side utilities.

simulate_conv_consumption walks a first conv layer's regions over an image
and reports, per region, whether the walk respects compressed-block
boundaries. sketch_fc_inputs shrinks the input vector of a fully-connected
layer by reshaping it to a matrix and left-multiplying by a smaller random
matrix; the layer that consumes the result then needs proportionally fewer
weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .compressors import SketchMatrix, gen_sketch_matrix
from .config import MAX_SEED
from .errors import DimensionMismatchError, ValidationError
from .grid import ConvArch, ImageDims


class RegionVisit(NamedTuple):
    row: int
    col: int
    aligned: bool
    whole_blocks: bool


@dataclass(frozen=True)
class ConsumptionReport:
    """Every region the conv walk visits, with block-alignment verdicts.

    aligned means the region's top-left corner sits on a compressed-block
    boundary; whole_blocks additionally requires the region side to be a
    multiple of the block side, so the region covers blocks exactly.
    """

    target_size: int
    region_ok: bool
    all_aligned: bool
    visits: tuple[RegionVisit, ...]

    @property
    def all_whole_blocks(self) -> bool:
        return self.all_aligned and self.region_ok


def simulate_conv_consumption(
    dims: ImageDims, arch: ConvArch, target_size: int
) -> ConsumptionReport:
    """Enumerate all region offsets (i*stride, j*stride) that fit in dims.

    The aggregate flags are computed from the enumeration, not from the
    divisibility formulas, so they double as evidence for the formula-based
    compatibility check. An image too small to fit any region yields an
    empty visit list and vacuously true aggregates.
    """
    if target_size < 1:
        raise ValidationError(f"target_size must be >= 1, got {target_size}")
    n, r, s = target_size, arch.region, arch.stride
    region_ok = r % n == 0
    row_offsets = range(0, dims.height - r + 1, s)
    col_offsets = range(0, dims.width - r + 1, s)
    visits = []
    for row in row_offsets:
        for col in col_offsets:
            aligned = row % n == 0 and col % n == 0
            visits.append(RegionVisit(row, col, aligned, aligned and region_ok))
    return ConsumptionReport(
        target_size=n,
        region_ok=region_ok,
        all_aligned=all(v.aligned for v in visits),
        visits=tuple(visits),
    )


@dataclass(frozen=True)
class FcSketchSpec:
    """How to shrink one fully-connected layer's input vector.

    The length-input_len vector is reshaped row-major to
    reshape_rows x reshape_cols and left-multiplied by a
    sketch_rows x reshape_rows matrix, leaving sketch_rows * reshape_cols
    values.
    """

    input_len: int
    reshape_rows: int
    reshape_cols: int
    sketch_rows: int
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.input_len, self.reshape_rows, self.reshape_cols, self.sketch_rows) < 1:
            raise ValidationError("all FcSketchSpec dimensions must be >= 1")
        if self.reshape_rows * self.reshape_cols != self.input_len:
            raise DimensionMismatchError(
                f"{self.reshape_rows}x{self.reshape_cols} does not hold "
                f"{self.input_len} values"
            )
        # equality is allowed: an identity-height sketch means the layer
        # keeps its full input (ratio 1.0)
        if self.sketch_rows > self.reshape_rows:
            raise ValidationError(
                f"sketch_rows={self.sketch_rows} must not exceed "
                f"reshape_rows={self.reshape_rows}"
            )
        if not 0 <= self.seed <= MAX_SEED:
            raise ValidationError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    @property
    def output_len(self) -> int:
        return self.sketch_rows * self.reshape_cols


def fc_sketch_matrix(spec: FcSketchSpec, density: float = 1.0) -> SketchMatrix:
    """The sparse Gaussian matrix a spec calls for (two-sided-style kind)."""
    return gen_sketch_matrix(
        rows=spec.sketch_rows,
        cols=spec.reshape_rows,
        density=density,
        seed=spec.seed,
        kind="ms",
    )


def sketch_fc_inputs(vector, spec: FcSketchSpec, mat: SketchMatrix) -> np.ndarray:
    """Compress a fully-connected layer's input vector.

    Reshape row-major, left-multiply, flatten row-major; output length is
    spec.output_len, as float32.
    """
    vec = np.asarray(vector)
    if vec.ndim != 1 or vec.shape[0] != spec.input_len:
        raise DimensionMismatchError(
            f"vector must have length {spec.input_len}, got shape {vec.shape}"
        )
    if mat.rows != spec.sketch_rows or mat.cols != spec.reshape_rows:
        raise DimensionMismatchError(
            f"matrix must be {spec.sketch_rows}x{spec.reshape_rows}, "
            f"got {mat.rows}x{mat.cols}"
        )
    grid = vec.reshape(spec.reshape_rows, spec.reshape_cols).astype(np.float64)
    out = mat.entries.astype(np.float64) @ grid
    return out.reshape(-1).astype(np.float32)


def fc_compression_ratio(spec: FcSketchSpec) -> float:
    """Compressed-over-uncompressed input fraction for one FC layer."""
    return spec.sketch_rows / spec.reshape_rows

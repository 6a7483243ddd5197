"""Block-local image compression with CNN-stride-compatible layout.

Images are tiled into square blocks and each block is compressed to a
smaller square by percentile sampling, random matrix multiplication,
two-sided matrix sketching, or area-average downgrading. The compressed
layout preserves spatial order so a CNN whose stride is a multiple of the
compressed block side can consume the result directly.
"""

from .augment import (
    apply_full,
    apply_limited,
    hflip,
    limited_crop,
    limited_flip,
    random_crop,
    resize,
)
from .compressors import (
    CompressedImage,
    PercentileScheme,
    SketchMatrix,
    compress_block_ms,
    compress_block_percentile,
    compress_block_rmm,
    compress_image,
    downgrade_area,
    gen_sketch_matrix,
    make_percentile_scheme,
    matrix_for_spec,
    pca_feasible,
)
from .config import AugmentParams, CompressionSpec, LimitedAugmentParams
from .errors import (
    BadMagicError,
    CropTooLargeError,
    DigestMismatchError,
    DimensionMismatchError,
    FormatError,
    InvalidBlockSizesError,
    LengthMismatchError,
    LocompError,
    MissingFileError,
    NonDivisibleError,
    SchemaViolationError,
    UpscaleNotSupportedError,
    ValidationError,
    VersionUnsupportedError,
)
from .formats import (
    DatasetManifest,
    ManifestEntry,
    MatrixRef,
    read_lcim,
    read_lcim_file,
    read_manifest,
    read_matrix,
    read_matrix_file,
    write_lcim,
    write_lcim_file,
    write_manifest,
    write_matrix,
    write_matrix_file,
)
from .grid import (
    CompatReport,
    ConvArch,
    ImageDims,
    TilingPlan,
    check_stride_compat,
    compressed_dims,
    compression_ratios,
    plan_tiling,
)
from .netops import (
    ConsumptionReport,
    FcSketchSpec,
    fc_compression_ratio,
    fc_sketch_matrix,
    simulate_conv_consumption,
    sketch_fc_inputs,
)
from .pipeline import (
    discover_dataset,
    iter_inline,
    load_image,
    prepare_default,
    sample_runtime,
    verify_manifest,
)

__version__ = "0.1.0"

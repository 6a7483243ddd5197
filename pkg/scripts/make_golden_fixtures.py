#!/usr/bin/env python3
"""Regenerate the golden format fixtures under tests/golden/.

Only run this when the on-disk formats change intentionally — the fixtures
pin the byte layout, and the tests carry frozen digests of these files that
must be updated in the same commit.
"""

from pathlib import Path

import numpy as np

from locomp.compressors import CompressedImage, SketchMatrix
from locomp.formats import write_lcim, write_matrix

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)

    pixels = np.array(
        [[1, 2, 3, 4], [5, 6, 7, 8]], dtype=np.uint8
    )[:, :, None]
    cimg = CompressedImage(
        method="percentile",
        block_size=7,
        target_size=2,
        pixels=pixels,
        spec_digest=bytes(range(32)),
    )
    (GOLDEN / "tiny.lcim").write_bytes(write_lcim(cimg))

    mat = SketchMatrix(
        kind="ms",
        entries=np.array([[1, 2, 3], [4, 5, 6]], dtype=np.float32),
        density=1.0,
        seed=42,
    )
    (GOLDEN / "tiny.lcmx").write_bytes(write_matrix(mat))

    for name in ("tiny.lcim", "tiny.lcmx"):
        data = (GOLDEN / name).read_bytes()
        print(f"{name}: {len(data)} bytes")
        print(data.hex())


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Measure on-disk storage ratios against the closed-form table.

Prepares one compressed dataset per copy count and compares the measured
payload bytes (headers excluded) with block_size^2 / (target_size^2 * c).
"""

import argparse
import tempfile
from pathlib import Path

from locomp.config import CompressionSpec
from locomp.formats import LCIM_HEADER_SIZE
from locomp.grid import compression_ratios
from locomp.pipeline import prepare_default


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="src", required=True, help="source image dir")
    parser.add_argument("--m", dest="block_size", type=int, default=7)
    parser.add_argument("--n", dest="target_size", type=int, default=2)
    parser.add_argument("--resize", type=int, default=256)
    parser.add_argument("--crop", type=int, default=224)
    parser.add_argument("--copies", type=int, nargs="+", default=[1, 2, 4])
    parser.add_argument("--seed", type=int, default=17)
    args = parser.parse_args()

    print(f"{'c':>3} {'CR':>8} {'SR (formula)':>13} {'SR (measured)':>14}")
    with tempfile.TemporaryDirectory() as tmp:
        for copies in args.copies:
            spec = CompressionSpec(
                method="percentile",
                block_size=args.block_size,
                target_size=args.target_size,
                seed=args.seed,
                resize_to=args.resize,
                crop_to=args.crop,
                copies=copies,
                mode="default",
            )
            out = Path(tmp) / f"c{copies}"
            manifest = prepare_default(args.src, spec, out)
            payload = sum(
                (out / e.path).stat().st_size - LCIM_HEADER_SIZE
                for e in manifest.entries
            )
            channels = 3
            source_bytes = len(manifest.sources()) * args.crop**2 * channels
            cr, sr = compression_ratios(args.block_size, args.target_size, copies)
            print(
                f"{copies:>3} {float(cr):>8.4g} {float(sr):>13.4g} "
                f"{source_bytes / payload:>14.4g}"
            )


if __name__ == "__main__":
    main()

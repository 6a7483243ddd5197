#!/usr/bin/env python3
"""Export network-ready tensors for an external training loop.

Two modes. ``--manifest`` draws runtime samples from a prepared dataset
(one per source per epoch, with the block-safe augmentations applied), the
way a training loader would. ``--in`` streams inline-mode tensors straight
from source images. Either way the output is a directory of ``.npy``
arrays (height x width x channels) plus a ``labels.csv``, which any
framework can consume, e.g.::

    arr = np.load(out / "epoch0_00000.npy")   # feed as the network input
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from locomp.config import CompressionSpec, LimitedAugmentParams
from locomp.formats import read_manifest
from locomp.pipeline import iter_inline, sample_runtime


def export_from_manifest(args, out: Path) -> list[tuple[str, str]]:
    manifest = read_manifest(args.manifest)
    limited = LimitedAugmentParams(
        crop_blocks=args.crop_blocks, flip_prob=args.flip_prob
    )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    rows = []
    sources = manifest.sources()
    for epoch in range(args.epochs):
        for i in range(len(sources)):
            cimg, label = sample_runtime(manifest, i, rng, limited)
            name = f"epoch{epoch}_{i:05d}.npy"
            np.save(out / name, cimg.pixels)
            rows.append((name, label))
    return rows


def export_inline(args, out: Path) -> list[tuple[str, str]]:
    spec = CompressionSpec(
        method=args.method,
        block_size=args.block_size,
        target_size=args.target_size,
        seed=args.seed,
        resize_to=args.resize,
        crop_to=args.crop,
        mode="inline",
        flip_prob=args.flip_prob,
    )
    rows = []
    for i, (pixels, label) in enumerate(
        iter_inline(args.src, spec, epochs=args.epochs)
    ):
        name = f"inline_{i:06d}.npy"
        np.save(out / name, pixels)
        rows.append((name, label))
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--manifest", help="prepared dataset manifest")
    source.add_argument("--in", dest="src", help="source images for inline mode")
    parser.add_argument("--out", required=True)
    parser.add_argument("--epochs", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--flip-prob", type=float, default=0.5)
    parser.add_argument("--crop-blocks", type=int, default=None)
    parser.add_argument("--method", default="percentile")
    parser.add_argument("--m", dest="block_size", type=int, default=7)
    parser.add_argument("--n", dest="target_size", type=int, default=2)
    parser.add_argument("--resize", type=int, default=256)
    parser.add_argument("--crop", type=int, default=224)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = export_from_manifest(args, out) if args.manifest else export_inline(args, out)
    with (out / "labels.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "label"])
        writer.writerows(rows)
    print(f"exported {len(rows)} tensors to {out}")


if __name__ == "__main__":
    main()

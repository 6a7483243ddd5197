#!/usr/bin/env python3
"""Generate a small labeled synthetic image dataset for experiments.

Images are noisy renderings of simple shapes (one shape class per label
directory), sized randomly within a range so the resize stage has work to
do. Handy for exercising the pipeline without downloading anything.
"""

import argparse
from pathlib import Path

import numpy as np
from PIL import Image

CLASSES = ("disc", "bar", "checker")


def render(kind: str, side: int, gen: np.random.Generator) -> np.ndarray:
    img = gen.integers(0, 64, size=(side, side, 3), dtype=np.uint8)
    yy, xx = np.mgrid[0:side, 0:side]
    if kind == "disc":
        mask = (yy - side / 2) ** 2 + (xx - side / 2) ** 2 < (side / 3) ** 2
    elif kind == "bar":
        mask = np.abs(xx - side / 2) < side / 8
    else:
        cell = max(side // 8, 1)
        mask = ((yy // cell) + (xx // cell)) % 2 == 0
    color = gen.integers(128, 256, size=3, dtype=np.uint8)
    img[mask] = color
    return img


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="dataset root to create")
    parser.add_argument("--per-class", type=int, default=20)
    parser.add_argument("--min-side", type=int, default=240)
    parser.add_argument("--max-side", type=int, default=320)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    gen = np.random.default_rng(args.seed)
    root = Path(args.out)
    for kind in CLASSES:
        (root / kind).mkdir(parents=True, exist_ok=True)
        for i in range(args.per_class):
            side = int(gen.integers(args.min_side, args.max_side + 1))
            Image.fromarray(render(kind, side, gen)).save(
                root / kind / f"{kind}_{i:04d}.png"
            )
    total = args.per_class * len(CLASSES)
    print(f"wrote {total} images under {root}")


if __name__ == "__main__":
    main()

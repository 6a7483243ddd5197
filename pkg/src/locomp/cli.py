"""Batch command-line front end.

Subcommands: compress (prepare a dataset in default mode), inspect (print
header fields of an .lcim/.lcmx/manifest), check (stride compatibility),
sample (draw runtime samples from a prepared dataset). Exit codes: 0
success, 1 validation, 2 I/O, 3 format.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image

from .compressors import CompressedImage
from .config import CompressionSpec, LimitedAugmentParams
from .errors import (
    FormatError,
    LocompError,
    MissingFileError,
    ValidationError,
)
from .formats import (
    LCIM_HEADER_SIZE,
    manifest_to_dict,
    read_lcim_file,
    read_manifest,
    read_matrix_file,
)
from .grid import ConvArch, ImageDims, check_stride_compat, compression_ratios
from .netops import simulate_conv_consumption
from .pipeline import MANIFEST_NAME, prepare_default, sample_runtime

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_FORMAT = 3


class CliUsageError(ValidationError):
    """Bad flags; reported like any other validation failure."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise CliUsageError(message)


def _ratio(value: Fraction) -> float:
    return float(value)


def _emit(args, payload: dict, human: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in human:
            print(line)


def cmd_compress(args) -> int:
    spec = CompressionSpec(
        method=args.method,
        block_size=args.block_size,
        target_size=args.target_size,
        density=args.gamma,
        seed=args.seed,
        resize_to=args.resize,
        crop_to=args.crop,
        copies=args.copies,
        mode="default",
        flip_prob=args.flip_prob,
    )
    arch = None
    if args.region is not None or args.stride is not None:
        if args.region is None or args.stride is None:
            raise CliUsageError("--r and --s must be given together")
        arch = ConvArch(region=args.region, stride=args.stride)
    manifest = prepare_default(
        args.in_dir, spec, args.out_dir, arch=arch, threads=args.threads
    )
    cr, sr = compression_ratios(spec.block_size, spec.target_size, spec.copies)
    payload_total = sum(
        (Path(args.out_dir) / e.path).stat().st_size - LCIM_HEADER_SIZE
        for e in manifest.entries
    )
    doc = {
        "manifest": str(Path(args.out_dir) / MANIFEST_NAME),
        "images": len(manifest.sources()),
        "entries": len(manifest.entries),
        "skipped": len(manifest.skipped),
        "matrices": [m.path for m in manifest.matrices],
        "payload_bytes": payload_total,
        "computational_ratio": _ratio(cr),
        "storage_ratio": _ratio(sr),
    }
    lines = [
        f"prepared {doc['images']} images -> {doc['entries']} compressed copies "
        f"({doc['skipped']} skipped)",
        f"payload bytes: {payload_total}",
        f"computational ratio: {_ratio(cr):g}x",
        f"storage ratio: {_ratio(sr):g}x",
        f"manifest: {doc['manifest']}",
    ]
    if manifest.matrices:
        lines.insert(1, "matrix files: " + ", ".join(m.path for m in manifest.matrices))
    _emit(args, doc, lines)
    return EXIT_OK


def _render(cimg: CompressedImage, out_path: Path) -> None:
    # Debug visualization of the compressed grid, not decompression.
    gray = cimg.pixels.astype(np.float64).mean(axis=2)
    if cimg.pixels.dtype != np.uint8:
        lo, hi = gray.min(), gray.max()
        gray = (gray - lo) * (255.0 / (hi - lo)) if hi > lo else np.zeros_like(gray)
    Image.fromarray(np.clip(np.rint(gray), 0, 255).astype(np.uint8), "L").save(out_path)


def _inspect_lcim(args, path: Path) -> int:
    cimg = read_lcim_file(path)
    cr, sr = compression_ratios(cimg.block_size, cimg.target_size, 1)
    doc = {
        "type": "lcim",
        "method": cimg.method,
        "block_size": cimg.block_size,
        "target_size": cimg.target_size,
        "height": cimg.height,
        "width": cimg.width,
        "channels": cimg.channels,
        "blocks_down": cimg.blocks_down,
        "blocks_across": cimg.blocks_across,
        "dtype": str(cimg.pixels.dtype),
        "spec_digest": cimg.spec_digest.hex(),
        "computational_ratio": _ratio(cr),
        "storage_ratio_per_copy": _ratio(sr),
    }
    lines = [
        f"{path}: compressed image",
        f"method: {cimg.method}  blocks {cimg.block_size}x{cimg.block_size} -> "
        f"{cimg.target_size}x{cimg.target_size}",
        f"dims: {cimg.height}x{cimg.width}x{cimg.channels} ({cimg.pixels.dtype})",
        f"block grid: {cimg.blocks_down}x{cimg.blocks_across}",
        f"computational ratio: {_ratio(cr):g}x (storage {_ratio(sr):g}x per copy)",
        f"spec digest: {cimg.spec_digest.hex()}",
    ]
    _emit(args, doc, lines)
    if args.render:
        _render(cimg, Path(args.render))
        if not args.json:
            print(f"rendered: {args.render}")
    return EXIT_OK


def _inspect_lcmx(args, path: Path) -> int:
    mat = read_matrix_file(path)
    doc = {
        "type": "lcmx",
        "kind": mat.kind,
        "rows": mat.rows,
        "cols": mat.cols,
        "density": mat.density,
        "seed": mat.seed,
        "nonzero_fraction": float(np.count_nonzero(mat.entries) / mat.entries.size),
    }
    lines = [
        f"{path}: sketch matrix",
        f"kind: {mat.kind}  shape: {mat.rows}x{mat.cols}",
        f"density: {mat.density:g}  seed: {mat.seed}",
        f"nonzero fraction: {doc['nonzero_fraction']:.4f}",
    ]
    _emit(args, doc, lines)
    return EXIT_OK


def _inspect_manifest(args, path: Path) -> int:
    manifest = read_manifest(path)
    spec = manifest.spec
    cr, sr = compression_ratios(spec.block_size, spec.target_size, spec.copies)
    doc = {
        "type": "manifest",
        "spec": spec.to_dict(),
        "images": len(manifest.sources()),
        "entries": len(manifest.entries),
        "skipped": len(manifest.skipped),
        "matrices": manifest_to_dict(manifest)["matrices"],
        "computational_ratio": _ratio(cr),
        "storage_ratio": _ratio(sr),
    }
    lines = [
        f"{path}: dataset manifest",
        f"method: {spec.method}  blocks {spec.block_size}x{spec.block_size} -> "
        f"{spec.target_size}x{spec.target_size}  copies: {spec.copies}",
        f"images: {doc['images']}  entries: {doc['entries']}  skipped: {doc['skipped']}",
        f"computational ratio: {_ratio(cr):g}x",
        f"storage ratio: {_ratio(sr):g}x",
    ]
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_inspect(args) -> int:
    path = Path(args.path)
    if not path.is_file():
        raise MissingFileError(f"{path} does not exist")
    if path.suffix == ".lcim":
        return _inspect_lcim(args, path)
    if path.suffix == ".lcmx":
        return _inspect_lcmx(args, path)
    return _inspect_manifest(args, path)


def cmd_check(args) -> int:
    arch = ConvArch(region=args.region, stride=args.stride)
    report = check_stride_compat(arch, args.target_size)
    dims = ImageDims(args.height, args.width)
    sim = simulate_conv_consumption(dims, arch, args.target_size)
    bad = [off for off, ok in report.offsets if not ok]
    doc = {
        "stride_ok": report.stride_ok,
        "region_ok": report.region_ok,
        "simulated_regions": len(sim.visits),
        "simulated_all_aligned": sim.all_aligned,
        "simulated_whole_blocks": sim.all_whole_blocks,
        "first_misaligned_offsets": bad[:8],
    }
    verdict = "OK" if report.stride_ok else "FAIL"
    lines = [
        f"{verdict}: stride {args.stride} % block side {args.target_size} "
        f"{'==' if report.stride_ok else '!='} 0",
        f"region side {args.region} {'is' if report.region_ok else 'is not'} "
        f"a multiple of {args.target_size}",
        f"simulated {len(sim.visits)} regions over {args.height}x{args.width}: "
        f"aligned={sim.all_aligned} whole_blocks={sim.all_whole_blocks}",
    ]
    if bad:
        lines.append(
            "misaligned region offsets start at: "
            + ", ".join(str(v) for v in bad[:8])
        )
    _emit(args, doc, lines)
    return EXIT_OK if report.stride_ok else EXIT_VALIDATION


def cmd_sample(args) -> int:
    manifest = read_manifest(Path(args.manifest))
    sources = manifest.sources()
    if not sources:
        raise ValidationError("manifest lists no entries to sample from")
    limited = LimitedAugmentParams(
        crop_blocks=args.crop_blocks, flip_prob=args.flip_prob
    )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(args.count):
        cimg, label = sample_runtime(manifest, i % len(sources), rng, limited)
        name = f"sample_{i:05d}.npy"
        np.save(out_dir / name, cimg.pixels)
        rows.append((name, label))
    with (out_dir / "labels.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "label"])
        writer.writerows(rows)
    doc = {"samples": args.count, "out_dir": str(out_dir)}
    _emit(args, doc, [f"wrote {args.count} tensors to {out_dir}"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="locomp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="prepare a compressed dataset (default mode)")
    p.add_argument("--in", dest="in_dir", required=True, help="source image directory")
    p.add_argument("--out", dest="out_dir", required=True, help="output directory")
    p.add_argument("--method", required=True,
                   choices=["percentile", "rmm", "ms", "downgrade"])
    p.add_argument("--m", dest="block_size", type=int, required=True,
                   help="source block side in pixels")
    p.add_argument("--n", dest="target_size", type=int, required=True,
                   help="compressed block side in pixels")
    p.add_argument("--gamma", type=float, default=1.0,
                   help="expected nonzero fraction of sketch-matrix entries")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resize", type=int, default=256)
    p.add_argument("--crop", type=int, default=224)
    p.add_argument("--copies", type=int, default=1)
    p.add_argument("--flip-prob", type=float, default=0.5)
    p.add_argument("--r", dest="region", type=int, default=None,
                   help="conv region side, for the stride compatibility gate")
    p.add_argument("--s", dest="stride", type=int, default=None,
                   help="conv stride, for the stride compatibility gate")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("inspect", help="print header fields of an artifact")
    p.add_argument("path")
    p.add_argument("--render", default=None,
                   help="write a grayscale PNG visualization of an .lcim grid")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("check", help="stride/block compatibility check")
    p.add_argument("--r", dest="region", type=int, required=True)
    p.add_argument("--s", dest="stride", type=int, required=True)
    p.add_argument("--n", dest="target_size", type=int, required=True)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sample", help="draw runtime samples from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--flip-prob", type=float, default=0.5)
    p.add_argument("--crop-blocks", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MissingFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except LocompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Dataset orchestration for the two operating modes.

Inline mode streams network-ready tensors, compressing each image at
iteration time after full augmentation. Default mode augments and
compresses once, stores the configured number of copies per source image
on disk, and serves them later through runtime sampling with the limited
augmentation suite.

Randomness contract: the augmentation stream for source image index i,
copy (or epoch) k is an independent Philox substream seeded by the entropy
tuple (spec.seed, i, k) and consumed in a fixed order (crop row, crop col,
flip coin). Results are therefore independent of thread count and replay
bit-exactly.
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from .augment import apply_limited, crop_and_flip, resize
from .compressors import CompressedImage, SketchMatrix, compress_image, matrix_for_spec
from .config import CompressionSpec, LimitedAugmentParams
from .errors import DigestMismatchError, MissingFileError, ValidationError
from .formats import (
    DatasetManifest,
    EntryRng,
    ManifestEntry,
    MatrixRef,
    SkippedSource,
    file_sha256,
    read_lcim_file,
    read_matrix_file,
    write_lcim_file,
    write_manifest,
    write_matrix_file,
)
from .grid import ConvArch, check_stride_compat

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".ppm", ".pgm")
LABELS_FILE = "labels.csv"
MANIFEST_NAME = "manifest.json"

THREADS_ENV = "LOCOMP_THREADS"


@dataclass(frozen=True)
class SourceImage:
    rel: str
    path: Path
    label: str


def load_image(path: Path | str) -> np.ndarray:
    """Decode a PNG/PPM/PGM file to a (H, W, C) uint8 array.

    Grayscale stays single-channel; palette, RGBA and other modes are
    normalized to RGB so the channel count is deterministic.
    """
    with Image.open(path) as img:
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.uint8)[:, :, None]
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return arr


def discover_dataset(root: Path | str) -> list[SourceImage]:
    """Find images under a directory tree, sorted by relative path.

    Labels come from a root-level labels.csv (columns: filename,label;
    filenames relative to the root) when present, otherwise from the
    image's parent directory name ('' for images directly in the root).
    """
    root = Path(root)
    if not root.is_dir():
        raise ValidationError(f"dataset root {root} is not a directory")
    label_map: dict[str, str] = {}
    labels_path = root / LABELS_FILE
    if labels_path.is_file():
        with labels_path.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if row.get("filename") is None or row.get("label") is None:
                    raise ValidationError(
                        f"{labels_path} needs 'filename' and 'label' columns"
                    )
                label_map[row["filename"]] = row["label"]

    items = []
    for path in sorted(root.rglob("*")):
        if path.suffix.lower() not in IMAGE_SUFFIXES or not path.is_file():
            continue
        rel = path.relative_to(root).as_posix()
        if rel in label_map:
            label = label_map[rel]
        else:
            parent = path.relative_to(root).parent.as_posix()
            label = "" if parent == "." else parent
        items.append(SourceImage(rel=rel, path=path, label=label))
    return items


def _entry_rng(spec: CompressionSpec, image_index: int, copy_index: int):
    seq = np.random.SeedSequence((spec.seed, image_index, copy_index))
    return np.random.Generator(np.random.Philox(seq))


def _require_default_compat(spec: CompressionSpec, arch: ConvArch | None) -> None:
    if arch is None:
        return
    report = check_stride_compat(arch, spec.target_size)
    if not report.stride_ok:
        raise ValidationError(
            f"stride {arch.stride} is not a multiple of the compressed block "
            f"side {spec.target_size}; default mode would misalign the conv walk"
        )


def iter_inline(
    source_dir: Path | str,
    spec: CompressionSpec,
    arch: ConvArch | None = None,
    *,
    epochs: int = 1,
    cache_dir: Path | str | None = None,
    skipped: list[SkippedSource] | None = None,
) -> Iterator[tuple[np.ndarray, str]]:
    """Stream (tensor, label) pairs, compressing at iteration time.

    Per epoch, per image: resize, random crop, coin-flip mirror, compress.
    When cache_dir is given the resized (still uncompressed) images are
    persisted there once and reused across epochs. Unreadable sources are
    logged, recorded in `skipped` if provided, and do not stop the run.
    """
    if spec.mode != "inline":
        raise ValidationError(f"iter_inline needs mode='inline', got {spec.mode!r}")
    if epochs < 1:
        raise ValidationError(f"epochs must be >= 1, got {epochs}")
    if arch is not None:
        report = check_stride_compat(arch, spec.target_size)
        if not report.stride_ok:
            log.warning(
                "stride %d is not a multiple of block side %d; regions will "
                "straddle compressed blocks", arch.stride, spec.target_size,
            )
    matrix = matrix_for_spec(spec)
    items = discover_dataset(source_dir)

    cache: dict[str, Path] = {}
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)

    bad: set[str] = set()

    def resized(item: SourceImage) -> np.ndarray | None:
        if item.rel in bad:
            return None
        try:
            if item.rel in cache:
                return load_image(cache[item.rel])
            img = resize(load_image(item.path), spec.resize_to)
            if cache_dir is not None:
                out = cache_dir / (item.rel.replace("/", "__") + ".png")
                mode = "L" if img.shape[2] == 1 else "RGB"
                Image.fromarray(img.squeeze(-1) if mode == "L" else img, mode).save(out)
                cache[item.rel] = out
            return img
        except (OSError, ValueError) as exc:
            bad.add(item.rel)
            log.warning("skipping unreadable image %s: %s", item.rel, exc)
            if skipped is not None:
                skipped.append(SkippedSource(source=item.rel, error=str(exc)))
            return None

    for epoch in range(epochs):
        for index, item in enumerate(items):
            img = resized(item)
            if img is None:
                continue
            rng = _entry_rng(spec, index, epoch)
            augmented = crop_and_flip(img, spec.crop_to, spec.flip_prob, rng)
            cimg = compress_image(augmented, spec, matrix)
            yield cimg.pixels, item.label


def _output_name(rel: str, copy_index: int) -> str:
    return rel.replace("/", "__") + f"__c{copy_index}.lcim"


def prepare_default(
    source_dir: Path | str,
    spec: CompressionSpec,
    out_dir: Path | str,
    arch: ConvArch | None = None,
    threads: int | None = None,
) -> DatasetManifest:
    """Augment, compress, and store `spec.copies` copies of every image.

    Layout under out_dir: one ``.lcim`` per (image, copy) beneath ``data/``,
    one ``.lcmx`` per sketch matrix, and ``manifest.json`` written last and
    atomically, so an aborted run never leaves a valid manifest behind.
    """
    if spec.mode != "default":
        raise ValidationError(f"prepare_default needs mode='default', got {spec.mode!r}")
    _require_default_compat(spec, arch)

    out_dir = Path(out_dir)
    data_dir = out_dir / "data"
    data_dir.mkdir(parents=True, exist_ok=True)

    matrix = matrix_for_spec(spec)
    matrices: tuple[MatrixRef, ...] = ()
    if matrix is not None:
        mat_name = f"sketch_{matrix.kind}.lcmx"
        write_matrix_file(matrix, out_dir / mat_name)
        matrices = (
            MatrixRef(path=mat_name, kind=matrix.kind, sha256=file_sha256(out_dir / mat_name)),
        )

    items = discover_dataset(source_dir)

    def process(job: tuple[int, SourceImage]):
        index, item = job
        try:
            base = resize(load_image(item.path), spec.resize_to)
        except (OSError, ValueError) as exc:
            log.warning("skipping unreadable image %s: %s", item.rel, exc)
            return SkippedSource(source=item.rel, error=str(exc))
        produced = []
        for copy_index in range(spec.copies):
            rng = _entry_rng(spec, index, copy_index)
            # Same draw order as crop_and_flip, recorded for the manifest.
            row = int(rng.integers(base.shape[0] - spec.crop_to + 1))
            col = int(rng.integers(base.shape[1] - spec.crop_to + 1))
            window = base[row : row + spec.crop_to, col : col + spec.crop_to]
            flipped = bool(rng.random() < spec.flip_prob)
            if flipped:
                window = window[:, ::-1]
            cimg = compress_image(np.ascontiguousarray(window), spec, matrix)
            name = _output_name(item.rel, copy_index)
            write_lcim_file(cimg, data_dir / name)
            produced.append(
                ManifestEntry(
                    source=item.rel,
                    label=item.label,
                    copy=copy_index,
                    path=f"data/{name}",
                    sha256=file_sha256(data_dir / name),
                    rng=EntryRng(
                        entropy=(spec.seed, index, copy_index),
                        crop=(row, col),
                        flipped=flipped,
                    ),
                )
            )
        return produced

    workers = resolve_threads(threads)
    entries: list[ManifestEntry] = []
    skipped: list[SkippedSource] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for result in pool.map(process, enumerate(items)):
            if isinstance(result, SkippedSource):
                skipped.append(result)
            else:
                entries.extend(result)

    manifest = DatasetManifest(
        spec=spec,
        matrices=matrices,
        entries=tuple(entries),
        skipped=tuple(skipped),
        root=out_dir,
    )
    write_manifest(manifest, out_dir / MANIFEST_NAME)
    return manifest


def resolve_threads(threads: int | None = None) -> int:
    """Explicit argument, else the LOCOMP_THREADS env var, else CPU count."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise ValidationError(f"threads must be >= 1, got {threads}")
    return threads


def sample_runtime(
    manifest: DatasetManifest,
    source: int | str,
    rng: np.random.Generator,
    limited: LimitedAugmentParams | None = None,
) -> tuple[CompressedImage, str]:
    """Draw one runtime training sample for a source image.

    Uniformly selects one of the stored copies, then applies the limited
    augmentation suite (optional block-aligned crop, block-order flip).
    Draw order: copy index, crop offsets (when configured), flip coin.
    """
    if manifest.root is None:
        raise ValidationError("manifest has no root directory; read it from disk")
    if isinstance(source, int):
        sources = manifest.sources()
        if not 0 <= source < len(sources):
            raise ValidationError(f"source index {source} out of range")
        source = sources[source]
    entries = manifest.entries_for(source)
    if not entries:
        raise ValidationError(f"manifest has no entries for source {source!r}")
    pick = entries[int(rng.integers(len(entries)))]
    path = manifest.root / pick.path
    if not path.is_file():
        raise MissingFileError(f"manifest entry payload {path} is absent")
    cimg = read_lcim_file(path)
    cimg = apply_limited(cimg, limited or LimitedAugmentParams(), rng)
    return cimg, pick.label


def verify_manifest(manifest: DatasetManifest) -> int:
    """Re-hash every referenced file and check stored digests.

    Also checks that each payload's embedded spec digest matches the
    manifest's spec. Returns the number of files verified.
    """
    if manifest.root is None:
        raise ValidationError("manifest has no root directory; read it from disk")
    checked = 0
    expected_spec = manifest.spec.digest()
    for ref in manifest.matrices:
        path = manifest.root / ref.path
        if not path.is_file():
            raise MissingFileError(f"matrix file {path} is absent")
        if file_sha256(path) != ref.sha256:
            raise DigestMismatchError(f"matrix file {path} does not match its digest")
        read_matrix_file(path)
        checked += 1
    for entry in manifest.entries:
        path = manifest.root / entry.path
        if not path.is_file():
            raise MissingFileError(f"entry payload {path} is absent")
        if file_sha256(path) != entry.sha256:
            raise DigestMismatchError(f"entry payload {path} does not match its digest")
        cimg = read_lcim_file(path)
        if cimg.spec_digest != expected_spec:
            raise DigestMismatchError(
                f"payload {path} was produced under a different spec"
            )
        checked += 1
    return checked

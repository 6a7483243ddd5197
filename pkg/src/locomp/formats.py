"""Bit-exact serialization for compressed images, sketch matrices, and
dataset manifests.

Binary layouts are fixed little-endian structures documented to the byte in
docs/FORMATS.md and pinned by golden-file tests. The payload of a ``.lcim``
file is ordered channel-major, then block-row-major, then row-major within
each block, so any whole block is one contiguous byte range. Files carry a
SHA-256 of their payload; a mismatch on read is an error. None of the
formats can reconstruct the original image: compression here is one-way by
design.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .compressors import CompressedImage, SketchMatrix
from .config import CompressionSpec
from .errors import (
    BadMagicError,
    DigestMismatchError,
    FormatError,
    LengthMismatchError,
    SchemaViolationError,
    ValidationError,
    VersionUnsupportedError,
)

LCIM_MAGIC = b"LCIM"
LCMX_MAGIC = b"LCMX"
LCIM_VERSION = 1
LCMX_VERSION = 1
MANIFEST_FORMAT = "locomp-manifest"
MANIFEST_VERSION = 1

_LCIM_HEAD = struct.Struct("<4sHBBHHHHII")  # 24 bytes
LCIM_HEADER_SIZE = _LCIM_HEAD.size + 64  # + spec digest + payload digest
_LCMX_HEAD = struct.Struct("<4sHBBIIdQ")  # 32 bytes
LCMX_HEADER_SIZE = _LCMX_HEAD.size + 32  # + payload digest

_METHOD_CODES = {"percentile": 0, "rmm": 1, "ms": 2, "downgrade": 3}
_METHOD_NAMES = {v: k for k, v in _METHOD_CODES.items()}
_DTYPE_CODES = {np.dtype(np.uint8): 0, np.dtype(np.float32): 1}
_DTYPE_NAMES = {0: np.dtype(np.uint8), 1: np.dtype(np.float32)}
_KIND_CODES = {"rmm": 0, "ms": 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_sha256(path: Path | str) -> str:
    return sha256_bytes(Path(path).read_bytes())


# --- compressed image container -------------------------------------------------

def payload_bytes(pixels: np.ndarray, target_size: int) -> bytes:
    """Serialize (H, W, C) pixels channel-major, block-row-major, then
    row-major within each block."""
    h, w, c = pixels.shape
    n = target_size
    planes = np.moveaxis(pixels, 2, 0)  # (C, H, W)
    blocks = planes.reshape(c, h // n, n, w // n, n).transpose(0, 1, 3, 2, 4)
    return np.ascontiguousarray(blocks).tobytes()


def _pixels_from_payload(
    payload: bytes, dtype: np.dtype, channels: int, blocks_down: int,
    blocks_across: int, target_size: int,
) -> np.ndarray:
    n = target_size
    blocks = np.frombuffer(payload, dtype=dtype).reshape(
        channels, blocks_down, blocks_across, n, n
    )
    planes = blocks.transpose(0, 1, 3, 2, 4).reshape(
        channels, blocks_down * n, blocks_across * n
    )
    return np.ascontiguousarray(np.moveaxis(planes, 0, 2))


def write_lcim(cimg: CompressedImage) -> bytes:
    payload = payload_bytes(cimg.pixels, cimg.target_size)
    head = _LCIM_HEAD.pack(
        LCIM_MAGIC,
        LCIM_VERSION,
        _METHOD_CODES[cimg.method],
        _DTYPE_CODES[cimg.pixels.dtype],
        cimg.block_size,
        cimg.target_size,
        cimg.channels,
        0,
        cimg.blocks_down,
        cimg.blocks_across,
    )
    return head + cimg.spec_digest + hashlib.sha256(payload).digest() + payload


def read_lcim(data: bytes) -> CompressedImage:
    if len(data) < 4 or data[:4] != LCIM_MAGIC:
        raise BadMagicError(f"expected magic {LCIM_MAGIC!r}")
    if len(data) < LCIM_HEADER_SIZE:
        raise LengthMismatchError(
            f"file has {len(data)} bytes, header alone needs {LCIM_HEADER_SIZE}"
        )
    (_, version, method_code, dtype_code, block_size, target_size,
     channels, _reserved, blocks_down, blocks_across) = _LCIM_HEAD.unpack_from(data)
    if version != LCIM_VERSION:
        raise VersionUnsupportedError(f"lcim version {version} not supported")
    if method_code not in _METHOD_NAMES:
        raise FormatError(f"unknown method code {method_code}")
    if dtype_code not in _DTYPE_NAMES:
        raise FormatError(f"unknown dtype code {dtype_code}")
    spec_digest = data[_LCIM_HEAD.size : _LCIM_HEAD.size + 32]
    stored_digest = data[_LCIM_HEAD.size + 32 : LCIM_HEADER_SIZE]
    dtype = _DTYPE_NAMES[dtype_code]
    expected = channels * blocks_down * blocks_across * target_size**2 * dtype.itemsize
    payload = data[LCIM_HEADER_SIZE:]
    if len(payload) != expected:
        raise LengthMismatchError(
            f"payload has {len(payload)} bytes, header implies {expected}"
        )
    if hashlib.sha256(payload).digest() != stored_digest:
        raise DigestMismatchError("payload does not match its stored digest")
    pixels = _pixels_from_payload(
        payload, dtype, channels, blocks_down, blocks_across, target_size
    )
    try:
        return CompressedImage(
            method=_METHOD_NAMES[method_code],
            block_size=block_size,
            target_size=target_size,
            pixels=pixels,
            spec_digest=spec_digest,
        )
    except ValidationError as exc:
        raise FormatError(f"header fields are inconsistent: {exc}") from exc


def write_lcim_file(cimg: CompressedImage, path: Path | str) -> None:
    Path(path).write_bytes(write_lcim(cimg))


def read_lcim_file(path: Path | str) -> CompressedImage:
    return read_lcim(Path(path).read_bytes())


# --- sketch matrix file ----------------------------------------------------------

def write_matrix(mat: SketchMatrix) -> bytes:
    payload = np.ascontiguousarray(mat.entries, dtype="<f4").tobytes()
    head = _LCMX_HEAD.pack(
        LCMX_MAGIC,
        LCMX_VERSION,
        _KIND_CODES[mat.kind],
        0,
        mat.rows,
        mat.cols,
        mat.density,
        mat.seed,
    )
    return head + hashlib.sha256(payload).digest() + payload


def read_matrix(data: bytes) -> SketchMatrix:
    if len(data) < 4 or data[:4] != LCMX_MAGIC:
        raise BadMagicError(f"expected magic {LCMX_MAGIC!r}")
    if len(data) < LCMX_HEADER_SIZE:
        raise LengthMismatchError(
            f"file has {len(data)} bytes, header alone needs {LCMX_HEADER_SIZE}"
        )
    _, version, kind_code, _reserved, rows, cols, density, seed = _LCMX_HEAD.unpack_from(data)
    if version != LCMX_VERSION:
        raise VersionUnsupportedError(f"lcmx version {version} not supported")
    if kind_code not in _KIND_NAMES:
        raise FormatError(f"unknown matrix kind code {kind_code}")
    stored_digest = data[_LCMX_HEAD.size : LCMX_HEADER_SIZE]
    payload = data[LCMX_HEADER_SIZE:]
    expected = rows * cols * 4
    if len(payload) != expected:
        raise LengthMismatchError(
            f"payload has {len(payload)} bytes, header implies {expected}"
        )
    if hashlib.sha256(payload).digest() != stored_digest:
        raise DigestMismatchError("payload does not match its stored digest")
    entries = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    try:
        return SketchMatrix(
            kind=_KIND_NAMES[kind_code], entries=entries, density=density, seed=seed
        )
    except ValidationError as exc:
        raise FormatError(f"header fields are inconsistent: {exc}") from exc


def write_matrix_file(mat: SketchMatrix, path: Path | str) -> None:
    Path(path).write_bytes(write_matrix(mat))


def read_matrix_file(path: Path | str) -> SketchMatrix:
    return read_matrix(Path(path).read_bytes())


# --- dataset manifest ------------------------------------------------------------

@dataclass(frozen=True)
class MatrixRef:
    path: str
    kind: str
    sha256: str


@dataclass(frozen=True)
class EntryRng:
    """The augmentation randomness actually used for one stored copy."""

    entropy: tuple[int, ...]
    crop: tuple[int, int]
    flipped: bool


@dataclass(frozen=True)
class ManifestEntry:
    source: str
    label: str
    copy: int
    path: str
    sha256: str
    rng: EntryRng


@dataclass(frozen=True)
class SkippedSource:
    source: str
    error: str


@dataclass(frozen=True)
class DatasetManifest:
    """Index of one prepared dataset: spec, matrices, and stored copies.

    root (where the manifest sits on disk) is attached on read/write so
    relative paths resolve; it does not participate in equality and is not
    serialized.
    """

    spec: CompressionSpec
    matrices: tuple[MatrixRef, ...]
    entries: tuple[ManifestEntry, ...]
    skipped: tuple[SkippedSource, ...] = ()
    root: Path | None = field(default=None, compare=False)

    def with_root(self, root: Path | str) -> "DatasetManifest":
        return DatasetManifest(
            spec=self.spec,
            matrices=self.matrices,
            entries=self.entries,
            skipped=self.skipped,
            root=Path(root),
        )

    def sources(self) -> list[str]:
        """Distinct source paths in first-seen entry order."""
        seen: dict[str, None] = {}
        for entry in self.entries:
            seen.setdefault(entry.source, None)
        return list(seen)

    def entries_for(self, source: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.source == source]


def manifest_to_dict(manifest: DatasetManifest) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "spec": manifest.spec.to_dict(),
        "spec_digest": manifest.spec.digest_hex(),
        "matrices": [
            {"path": m.path, "kind": m.kind, "sha256": m.sha256}
            for m in manifest.matrices
        ],
        "entries": [
            {
                "source": e.source,
                "label": e.label,
                "copy": e.copy,
                "path": e.path,
                "sha256": e.sha256,
                "rng": {
                    "entropy": list(e.rng.entropy),
                    "crop": list(e.rng.crop),
                    "flipped": e.rng.flipped,
                },
            }
            for e in manifest.entries
        ],
        "skipped": [{"source": s.source, "error": s.error} for s in manifest.skipped],
    }


def _need(mapping: dict, key: str, kind, ctx: str):
    if not isinstance(mapping, dict):
        raise SchemaViolationError(f"{ctx} must be an object")
    if key not in mapping:
        raise SchemaViolationError(f"{ctx} is missing required key {key!r}")
    value = mapping[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaViolationError(f"{ctx}.{key} must be a number")
        return float(value)
    if kind is int and isinstance(value, bool):
        raise SchemaViolationError(f"{ctx}.{key} must be an integer")
    if not isinstance(value, kind):
        raise SchemaViolationError(f"{ctx}.{key} has the wrong type")
    return value


def _check_hex_digest(value: str, ctx: str) -> str:
    if len(value) != 64 or any(ch not in "0123456789abcdef" for ch in value):
        raise SchemaViolationError(f"{ctx} must be a 64-char lowercase hex digest")
    return value


def manifest_from_dict(doc: dict) -> DatasetManifest:
    if _need(doc, "format", str, "manifest") != MANIFEST_FORMAT:
        raise SchemaViolationError(f"manifest.format must be {MANIFEST_FORMAT!r}")
    version = _need(doc, "version", int, "manifest")
    if version != MANIFEST_VERSION:
        raise VersionUnsupportedError(f"manifest version {version} not supported")
    try:
        spec = CompressionSpec.from_dict(_need(doc, "spec", dict, "manifest"))
    except (ValidationError, TypeError) as exc:
        raise SchemaViolationError(f"manifest.spec is invalid: {exc}") from exc
    digest = _check_hex_digest(_need(doc, "spec_digest", str, "manifest"), "spec_digest")
    if digest != spec.digest_hex():
        raise SchemaViolationError("spec_digest does not match the spec fields")

    matrices = []
    for i, m in enumerate(_need(doc, "matrices", list, "manifest")):
        ctx = f"matrices[{i}]"
        matrices.append(
            MatrixRef(
                path=_need(m, "path", str, ctx),
                kind=_need(m, "kind", str, ctx),
                sha256=_check_hex_digest(_need(m, "sha256", str, ctx), f"{ctx}.sha256"),
            )
        )

    entries = []
    for i, e in enumerate(_need(doc, "entries", list, "manifest")):
        ctx = f"entries[{i}]"
        rng = _need(e, "rng", dict, ctx)
        crop = _need(rng, "crop", list, f"{ctx}.rng")
        entropy = _need(rng, "entropy", list, f"{ctx}.rng")
        if len(crop) != 2 or not all(isinstance(v, int) for v in crop):
            raise SchemaViolationError(f"{ctx}.rng.crop must be two integers")
        if not entropy or not all(isinstance(v, int) for v in entropy):
            raise SchemaViolationError(f"{ctx}.rng.entropy must be integers")
        entries.append(
            ManifestEntry(
                source=_need(e, "source", str, ctx),
                label=_need(e, "label", str, ctx),
                copy=_need(e, "copy", int, ctx),
                path=_need(e, "path", str, ctx),
                sha256=_check_hex_digest(_need(e, "sha256", str, ctx), f"{ctx}.sha256"),
                rng=EntryRng(
                    entropy=tuple(entropy),
                    crop=(crop[0], crop[1]),
                    flipped=_need(rng, "flipped", bool, f"{ctx}.rng"),
                ),
            )
        )

    per_source: dict[str, list[int]] = {}
    for entry in entries:
        per_source.setdefault(entry.source, []).append(entry.copy)
    for source, copies in per_source.items():
        if sorted(copies) != list(range(spec.copies)):
            raise SchemaViolationError(
                f"source {source!r} must have copy indices 0..{spec.copies - 1}"
            )

    skipped = tuple(
        SkippedSource(
            source=_need(s, "source", str, f"skipped[{i}]"),
            error=_need(s, "error", str, f"skipped[{i}]"),
        )
        for i, s in enumerate(_need(doc, "skipped", list, "manifest"))
    )
    return DatasetManifest(
        spec=spec, matrices=tuple(matrices), entries=tuple(entries), skipped=skipped
    )


def write_manifest(manifest: DatasetManifest, path: Path | str) -> None:
    """Serialize to canonical JSON; the write is atomic (tmp + rename)."""
    path = Path(path)
    text = json.dumps(manifest_to_dict(manifest), indent=2, sort_keys=True) + "\n"
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def read_manifest(path: Path | str) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolationError(f"manifest is not valid JSON: {exc}") from exc
    return manifest_from_dict(doc).with_root(path.parent)

"""Parsers for the big-endian IDX container of the source digit dataset."""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """An IDX byte stream is malformed; the message names the byte offset."""


def parse_idx_images(raw: bytes) -> list[np.ndarray]:
    """Parse an IDX image file into a list of (rows, cols) uint8 arrays."""
    if len(raw) < 16:
        raise IdxFormatError(f"image header truncated: need 16 bytes, have {len(raw)} (offset {len(raw)})")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(f"bad image magic 0x{magic:08x} at offset 0 (expected 0x{IMAGE_MAGIC:08x})")
    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise IdxFormatError(
            f"image payload truncated at offset {len(raw)}: expected {expected} bytes for {count} images of {rows}x{cols}"
        )
    if len(raw) > expected:
        raise IdxFormatError(f"trailing data after image payload at offset {expected}")
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows, cols)
    return [pixels[i] for i in range(count)]


def parse_idx_labels(raw: bytes) -> list[int]:
    """Parse an IDX label file into a list of digit classes 0-9."""
    if len(raw) < 8:
        raise IdxFormatError(f"label header truncated: need 8 bytes, have {len(raw)} (offset {len(raw)})")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != LABEL_MAGIC:
        raise IdxFormatError(f"bad label magic 0x{magic:08x} at offset 0 (expected 0x{LABEL_MAGIC:08x})")
    expected = 8 + count
    if len(raw) < expected:
        raise IdxFormatError(f"label payload truncated at offset {len(raw)}: expected {expected} bytes for {count} labels")
    if len(raw) > expected:
        raise IdxFormatError(f"trailing data after label payload at offset {expected}")
    labels = list(raw[8:expected])
    for i, value in enumerate(labels):
        if value > 9:
            raise IdxFormatError(f"label {value} out of range 0-9 at offset {8 + i}")
    return labels


def _read_maybe_gzipped(path: Path) -> bytes:
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def load_idx_images(path: str | Path) -> list[np.ndarray]:
    return parse_idx_images(_read_maybe_gzipped(Path(path)))


def load_idx_labels(path: str | Path) -> list[int]:
    return parse_idx_labels(_read_maybe_gzipped(Path(path)))

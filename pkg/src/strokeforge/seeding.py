"""Labeled sub-seed derivation so one seed reproduces an entire run."""

from __future__ import annotations

import hashlib


def derive_seed(master: int, label: str) -> int:
    """Stable 128-bit sub-seed for a named consumer of the master seed."""
    digest = hashlib.sha256(f"{master}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "big")

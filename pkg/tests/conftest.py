"""Shared fixtures: the desk-scale corpus and official-dataset discovery.

Desk experiments prefer the official IDX files when present (point
STROKEFORGE_MNIST_DIR at a directory holding train-images-idx3-ubyte etc.,
optionally gzipped); otherwise they run on the deterministic synthetic
digit corpus.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthdigits import synthetic_sequences  # noqa: E402

IDX_NAMES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def find_mnist_dir() -> Path | None:
    """Directory holding the official IDX files, or None."""
    candidates = []
    env = os.environ.get("STROKEFORGE_MNIST_DIR")
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parent.parent / "data")
    for root in candidates:
        if all(
            (root / name).exists() or (root / f"{name}.gz").exists()
            for name in IDX_NAMES.values()
        ):
            return root
    return None


def idx_path(root: Path, key: str) -> Path:
    name = IDX_NAMES[key]
    plain = root / name
    return plain if plain.exists() else root / f"{name}.gz"


@pytest.fixture(scope="session")
def desk_corpus():
    """(train, test) stroke sequences for the desk-scale experiments.

    1000 train / 500 test, from the official dataset when available and
    the synthetic corpus otherwise. Deterministic either way.
    """
    root = find_mnist_dir()
    if root is not None:
        from strokeforge.idx import load_idx_images, load_idx_labels
        from strokeforge.pipeline import convert_dataset

        images = load_idx_images(idx_path(root, "train_images"))[:1600]
        labels = load_idx_labels(idx_path(root, "train_labels"))[:1600]
        sequences, _ = convert_dataset(images, labels, workers=2)
        train, test = sequences[:1000], sequences[1000:1500]
    else:
        sequences = synthetic_sequences(1500, seed=20260810, workers=2)
        train, test = sequences[:1000], sequences[1000:]
    assert len(train) == 1000 and len(test) == 500
    return train, test


@pytest.fixture(scope="session")
def small_corpus():
    """120 synthetic sequences for quick functional tests."""
    return synthetic_sequences(120, seed=99)

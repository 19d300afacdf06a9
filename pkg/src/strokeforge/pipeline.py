"""Raster digit images to pen-stroke sequences: threshold, thin, traverse.

The conversion of one image runs select_threshold -> binarize -> thin ->
extract_strokes. Each stage is exposed separately so tests can drive them
against independent oracles, and render_sequence inverts the traversal for
round-trip checks.
"""

from __future__ import annotations

import logging
import multiprocessing
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .strokes import END_OF_DIGIT, PEN_LIFT, PenStep, StrokeSequence

log = logging.getLogger(__name__)

MAX_THRESHOLD_LEVEL = 250
PIXEL_KEEP_FRACTION = 0.5
CANVAS_SIZE = 28

_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)
_STRUCTURE_8 = np.ones((3, 3), dtype=np.uint8)


class DegenerateImageError(ValueError):
    """Image has no usable ink; callers skip it and log the index."""


class RenderRangeError(ValueError):
    """A rendered pen position left the canvas; message names the step."""


@dataclass(frozen=True)
class GrayImage:
    """Raster grayscale image, intensities 0-255, row-major."""

    pixels: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self) -> None:
        if self.pixels.ndim != 2 or self.pixels.dtype != np.uint8:
            raise ValueError(f"pixels must be a 2-D uint8 array, got {self.pixels.dtype} {self.pixels.shape}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class BinaryImage:
    """Binary image; 1 = ink."""

    bits: np.ndarray  # uint8 of {0,1}, shape (height, width)

    def __post_init__(self) -> None:
        if self.bits.ndim != 2 or self.bits.dtype != np.uint8:
            raise ValueError(f"bits must be a 2-D uint8 array, got {self.bits.dtype} {self.bits.shape}")
        if self.bits.max(initial=0) > 1:
            raise ValueError("bits must contain only 0 and 1")

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def ink_count(self) -> int:
        return int(self.bits.sum())


def binarize(img: GrayImage, level: int) -> BinaryImage:
    """Ink where intensity is strictly greater than ``level``."""
    if not 0 <= level <= 255:
        raise ValueError(f"threshold level must be in [0, 255], got {level}")
    return BinaryImage((img.pixels > level).astype(np.uint8))


def count_components(img: BinaryImage, connectivity: int) -> int:
    """Number of maximal connected ink regions under 4- or 8-connectivity."""
    if connectivity == 4:
        structure = _STRUCTURE_4
    elif connectivity == 8:
        structure = _STRUCTURE_8
    else:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    _, count = ndimage.label(img.bits, structure=structure)
    return int(count)


def select_threshold(img: GrayImage) -> int:
    """Highest level whose binarization preserves the level-0 structure.

    Scanning upward from level 0, a level fails once the 4- or 8-connected
    component count differs from the level-0 count, the ink count drops
    below half the level-0 count, or the level reaches 250; the level
    before the first failure is returned. The binarized image only changes
    at the image's distinct intensities, so only those levels are
    re-examined; the result matches a unit-step scan exactly.
    """
    base = binarize(img, 0)
    base_count = base.ink_count
    if base_count == 0:
        raise DegenerateImageError("image has no nonzero pixels")
    base4 = count_components(base, 4)
    base8 = count_components(base, 8)

    for level in (int(v) for v in np.unique(img.pixels) if 1 <= v <= MAX_THRESHOLD_LEVEL - 1):
        candidate = binarize(img, level)
        if 2 * candidate.ink_count < base_count:
            return level - 1
        if count_components(candidate, 4) != base4 or count_components(candidate, 8) != base8:
            return level - 1
    return MAX_THRESHOLD_LEVEL - 1


def thin(img: BinaryImage) -> BinaryImage:
    """Iterative two-subpass boundary erosion to a one-pixel-wide skeleton.

    Repeats both subpasses until a full pass deletes nothing. Only ever
    removes ink, so the output is a subset of the input.
    """
    a = img.bits.copy()
    changed = True
    while changed:
        changed = False
        for subpass in (0, 1):
            p = np.pad(a, 1)
            n = p[:-2, 1:-1]  # clockwise ring from the north neighbour
            ne = p[:-2, 2:]
            e = p[1:-1, 2:]
            se = p[2:, 2:]
            s = p[2:, 1:-1]
            sw = p[2:, :-2]
            w = p[1:-1, :-2]
            nw = p[:-2, :-2]
            ring = (n, ne, e, se, s, sw, w, nw)
            neighbours = np.zeros(a.shape, dtype=np.int32)
            for r in ring:
                neighbours += r
            transitions = np.zeros(a.shape, dtype=np.int32)
            for k in range(8):
                transitions += (ring[k] == 0) & (ring[(k + 1) % 8] == 1)
            if subpass == 0:
                cond = (n * e * s == 0) & (e * s * w == 0)
            else:
                cond = (n * e * w == 0) & (n * s * w == 0)
            deletable = (a == 1) & (neighbours >= 2) & (neighbours <= 6) & (transitions == 1) & cond
            if deletable.any():
                a[deletable] = 0
                changed = True
    return BinaryImage(a)


def _nearest(candidates: Sequence[tuple[int, int]], pos: tuple[int, int]) -> tuple[int, int]:
    # Euclidean distance, ties broken by (row, column) scan order.
    return min(candidates, key=lambda rc: ((rc[0] - pos[0]) ** 2 + (rc[1] - pos[1]) ** 2, rc[0], rc[1]))


def extract_strokes(skeleton: BinaryImage) -> list[PenStep]:
    """Greedy traversal of every ink pixel, emitting pen offsets.

    Each stroke starts at the unvisited pixel nearest the pen (initially
    the top-left origin) and follows nearest unvisited 8-connected
    neighbours; when none remains a pen-lift step is inserted before the
    jump. The sequence ends with the (0,0,1,1) terminator.
    """
    rows, cols = np.nonzero(skeleton.bits)
    if len(rows) == 0:
        raise DegenerateImageError("skeleton has no ink pixels")
    remaining = {(int(r), int(c)) for r, c in zip(rows, cols)}

    steps: list[PenStep] = []
    cur = (0, 0)  # (row, col); origin is the canvas top-left
    while remaining:
        if steps:
            steps.append(PEN_LIFT)
        nxt = _nearest(list(remaining), cur)
        while True:
            steps.append(PenStep(nxt[1] - cur[1], nxt[0] - cur[0], 0, 0))
            remaining.discard(nxt)
            cur = nxt
            neighbours = [
                (cur[0] + dr, cur[1] + dc)
                for dr in (-1, 0, 1)
                for dc in (-1, 0, 1)
                if (dr, dc) != (0, 0) and (cur[0] + dr, cur[1] + dc) in remaining
            ]
            if not neighbours:
                break
            nxt = _nearest(neighbours, cur)
    steps.append(END_OF_DIGIT)
    return steps


def render_sequence(steps: Sequence[PenStep], width: int = CANVAS_SIZE, height: int = CANVAS_SIZE) -> BinaryImage:
    """Mark every pen-down position of a step sequence onto a canvas.

    eos steps mark nothing; the step after one starts the next stroke.
    """
    bits = np.zeros((height, width), dtype=np.uint8)
    x = y = 0
    for i, step in enumerate(steps):
        x += step.dx
        y += step.dy
        if step.eos:
            continue
        if not (0 <= x < width and 0 <= y < height):
            raise RenderRangeError(f"step {i} moves the pen to ({x}, {y}), outside {width}x{height}")
        bits[y, x] = 1
    return BinaryImage(bits)


def image_to_sequence(img: GrayImage, label: int | None = None) -> StrokeSequence:
    """Full single-image conversion; raises DegenerateImageError on blanks."""
    level = select_threshold(img)
    skeleton = thin(binarize(img, level))
    return StrokeSequence(steps=extract_strokes(skeleton), label=label)


def _convert_one(args: tuple[np.ndarray, int]) -> list[PenStep] | None:
    pixels, label = args
    try:
        return image_to_sequence(GrayImage(pixels), label).steps
    except DegenerateImageError:
        return None


def convert_dataset(
    images: Sequence[np.ndarray | GrayImage],
    labels: Sequence[int],
    workers: int = 1,
) -> tuple[list[StrokeSequence], list[int]]:
    """Convert an image/label set to sequences, skipping degenerate images.

    Returns the sequences in input order plus the indices of skipped
    images. Conversion is per-image pure, so ``workers > 1`` fans out over
    processes without changing the output.
    """
    if len(images) != len(labels):
        raise ValueError(f"got {len(images)} images but {len(labels)} labels")
    arrays = [img.pixels if isinstance(img, GrayImage) else img for img in images]
    jobs = list(zip(arrays, labels))

    if workers > 1 and len(jobs) > 1:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_convert_one, jobs, chunksize=64)
    else:
        results = [_convert_one(job) for job in jobs]

    sequences: list[StrokeSequence] = []
    skipped: list[int] = []
    for i, steps in enumerate(results):
        if steps is None:
            skipped.append(i)
            log.info("skipping degenerate image %d (no usable ink)", i)
        else:
            sequences.append(StrokeSequence(steps=steps, label=int(labels[i])))
    return sequences, skipped

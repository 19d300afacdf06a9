"""Threshold, thinning, component, and traversal behavior against oracles."""

from __future__ import annotations

import numpy as np
import pytest

from oracles import flood_fill_components, reference_select_threshold, reference_thin
from strokeforge.pipeline import (
    BinaryImage,
    DegenerateImageError,
    GrayImage,
    RenderRangeError,
    binarize,
    convert_dataset,
    count_components,
    extract_strokes,
    image_to_sequence,
    render_sequence,
    select_threshold,
    thin,
)
from strokeforge.strokes import PenStep
from synthdigits import generate_corpus


def gray(arr) -> GrayImage:
    return GrayImage(np.asarray(arr, dtype=np.uint8))


def binary(arr) -> BinaryImage:
    return BinaryImage(np.asarray(arr, dtype=np.uint8))


def random_bits(rng, shape=(12, 12), density=0.4) -> BinaryImage:
    return BinaryImage((rng.random(shape) < density).astype(np.uint8))


# -- binarize ----------------------------------------------------------------

def test_binarize_all_zero_stays_zero():
    img = gray(np.zeros((5, 5)))
    assert binarize(img, 0).ink_count == 0


def test_binarize_strict_inequality_boundary():
    px = np.zeros((3, 3), dtype=np.uint8)
    px[1, 1] = 255
    assert binarize(gray(px), 254).bits[1, 1] == 1
    assert binarize(gray(px), 255).ink_count == 0


def test_binarize_monotone_in_level():
    rng = np.random.default_rng(5)
    px = rng.integers(0, 256, size=(10, 10)).astype(np.uint8)
    counts = [binarize(gray(px), level).ink_count for level in range(256)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


# -- connected components ------------------------------------------------------

def test_components_empty_image():
    img = binary(np.zeros((4, 4)))
    assert count_components(img, 4) == 0
    assert count_components(img, 8) == 0


def test_components_diagonal_pair():
    img = binary([[1, 0], [0, 1]])
    assert count_components(img, 4) == 2
    assert count_components(img, 8) == 1


def test_components_hollow_ring():
    bits = np.ones((3, 3), dtype=np.uint8)
    bits[1, 1] = 0
    img = BinaryImage(bits)
    # Frozen from the flood-fill oracle: one region either way.
    assert count_components(img, 4) == 1 == flood_fill_components(bits, 4)
    assert count_components(img, 8) == 1 == flood_fill_components(bits, 8)


def test_components_match_flood_fill_oracle():
    rng = np.random.default_rng(17)
    for density in (0.2, 0.45, 0.7):
        for _ in range(20):
            img = random_bits(rng, density=density)
            for conn in (4, 8):
                assert count_components(img, conn) == flood_fill_components(img.bits, conn)


def test_components_rejects_bad_connectivity():
    with pytest.raises(ValueError):
        count_components(binary([[1]]), 6)


# -- select_threshold ----------------------------------------------------------

def test_threshold_all_max_intensity_hits_ceiling():
    px = np.zeros((5, 5), dtype=np.uint8)
    px[1:4, 2] = 255
    assert select_threshold(gray(px)) == 249


def test_threshold_component_split_case():
    # The middle pixel vanishes at level 37, splitting one region into two.
    px = np.zeros((3, 5), dtype=np.uint8)
    px[1, 1:4] = (50, 37, 50)
    assert select_threshold(gray(px)) == 36


def test_threshold_two_band_alternating_case():
    # Alternating 100/200 line: at level 100 the line shatters, so 99 wins.
    px = np.zeros((3, 7), dtype=np.uint8)
    px[1, 1:6] = (200, 100, 200, 100, 200)
    assert select_threshold(gray(px)) == 99
    assert reference_select_threshold(px) == 99


def test_threshold_pixel_loss_case():
    # Nine faint pixels and one bright one: losing the faint band at level
    # 60 drops the count below half, so the previous level is chosen.
    px = np.zeros((4, 6), dtype=np.uint8)
    px[1, 1:4] = 60
    px[2, 1:4] = 60
    px[1, 4] = 200
    assert select_threshold(gray(px)) == reference_select_threshold(px) == 59


def test_threshold_matches_reference_scan_on_random_images():
    rng = np.random.default_rng(23)
    palette = np.array([0, 0, 30, 90, 150, 210, 250, 255], dtype=np.uint8)
    for _ in range(25):
        px = palette[rng.integers(0, len(palette), size=(9, 9))]
        if not px.any():
            continue
        assert select_threshold(gray(px)) == reference_select_threshold(px)


def test_threshold_postconditions_on_synthetic_digits():
    images, _ = generate_corpus(30, seed=3)
    for px in images:
        img = gray(px)
        level = select_threshold(img)
        base = binarize(img, 0)
        chosen = binarize(img, level)
        assert level <= 249
        assert 2 * chosen.ink_count >= base.ink_count
        for conn in (4, 8):
            assert count_components(chosen, conn) == count_components(base, conn)


def test_threshold_rejects_blank_image():
    with pytest.raises(DegenerateImageError):
        select_threshold(gray(np.zeros((5, 5))))


# -- thinning -------------------------------------------------------------------

def test_thin_empty_is_fixed_point():
    img = binary(np.zeros((6, 6)))
    assert thin(img).ink_count == 0


def test_thin_single_pixel_is_fixed_point():
    bits = np.zeros((5, 5), dtype=np.uint8)
    bits[2, 2] = 1
    assert (thin(BinaryImage(bits)).bits == bits).all()


def test_thin_solid_square_matches_reference():
    bits = np.zeros((7, 7), dtype=np.uint8)
    bits[1:6, 1:6] = 1
    expected = np.zeros((7, 7), dtype=np.uint8)
    expected[3, 3] = 1  # frozen from the reference implementation
    result = thin(BinaryImage(bits))
    assert (result.bits == expected).all()
    assert (result.bits == reference_thin(bits)).all()


def test_thin_matches_reference_on_random_blobs():
    rng = np.random.default_rng(31)
    for density in (0.3, 0.55, 0.8):
        for _ in range(12):
            img = random_bits(rng, shape=(14, 14), density=density)
            assert (thin(img).bits == reference_thin(img.bits)).all()


def test_thin_idempotent_and_never_adds_ink():
    rng = np.random.default_rng(37)
    for _ in range(15):
        img = random_bits(rng, shape=(16, 16), density=0.6)
        once = thin(img)
        assert (once.bits <= img.bits).all()
        assert (thin(once).bits == once.bits).all()


# -- extraction and rendering ----------------------------------------------------

def test_extract_first_offsets_match_published_figure():
    # Traversal that starts 6 right, 4 down, then 1 right and 1 up.
    bits = np.zeros((28, 28), dtype=np.uint8)
    bits[4, 6] = 1
    bits[3, 7] = 1
    bits[3, 8] = 1
    steps = extract_strokes(BinaryImage(bits))
    assert steps[0] == PenStep(6, 4, 0, 0)
    assert steps[1] == PenStep(1, -1, 0, 0)


def test_extract_single_pixel():
    bits = np.zeros((28, 28), dtype=np.uint8)
    bits[5, 3] = 1  # column 3, row 5
    assert extract_strokes(BinaryImage(bits)) == [PenStep(3, 5, 0, 0), PenStep(0, 0, 1, 1)]


def test_extract_inserts_pen_lift_between_distant_pixels():
    bits = np.zeros((28, 28), dtype=np.uint8)
    bits[1, 1] = 1
    bits[5, 5] = 1
    assert extract_strokes(BinaryImage(bits)) == [
        PenStep(1, 1, 0, 0),
        PenStep(0, 0, 1, 0),
        PenStep(4, 4, 0, 0),
        PenStep(0, 0, 1, 1),
    ]


def test_extract_empty_skeleton_raises():
    with pytest.raises(DegenerateImageError):
        extract_strokes(binary(np.zeros((4, 4))))


def test_render_single_pixel_inverse():
    img = render_sequence([PenStep(3, 5, 0, 0), PenStep(0, 0, 1, 1)])
    expected = np.zeros((28, 28), dtype=np.uint8)
    expected[5, 3] = 1
    assert (img.bits == expected).all()


def test_render_empty_sequence_is_blank():
    assert render_sequence([]).ink_count == 0


def test_render_out_of_canvas_names_step():
    with pytest.raises(RenderRangeError, match="step 1"):
        render_sequence([PenStep(3, 3, 0, 0), PenStep(-5, 0, 0, 0)])


def test_extract_render_round_trip_on_random_images():
    rng = np.random.default_rng(41)
    for _ in range(25):
        img = random_bits(rng, shape=(28, 28), density=0.08)
        if img.ink_count == 0:
            continue
        steps = extract_strokes(img)
        non_eos = [s for s in steps if s.eos == 0]
        assert len(non_eos) == img.ink_count
        assert (render_sequence(steps).bits == img.bits).all()


def test_extract_render_round_trip_on_thinned_digits():
    images, labels = generate_corpus(40, seed=11)
    for px in images:
        img = gray(px)
        skeleton = thin(binarize(img, select_threshold(img)))
        steps = extract_strokes(skeleton)
        assert (render_sequence(steps).bits == skeleton.bits).all()


# -- dataset conversion ------------------------------------------------------------

def test_convert_dataset_skips_degenerate_and_keeps_order():
    images, labels = generate_corpus(12, seed=2)
    images[4] = np.zeros((28, 28), dtype=np.uint8)
    sequences, skipped = convert_dataset(images, labels)
    assert skipped == [4]
    assert len(sequences) == 11
    expected_labels = [l for i, l in enumerate(labels) if i != 4]
    assert [s.label for s in sequences] == expected_labels
    for seq in sequences:
        seq.validate()


def test_convert_dataset_parallel_matches_serial():
    images, labels = generate_corpus(20, seed=13)
    serial, skipped_s = convert_dataset(images, labels, workers=1)
    parallel, skipped_p = convert_dataset(images, labels, workers=2)
    assert skipped_s == skipped_p
    assert [s.steps for s in serial] == [p.steps for p in parallel]


def test_convert_dataset_rejects_mismatched_lengths():
    images, labels = generate_corpus(4, seed=1)
    with pytest.raises(ValueError):
        convert_dataset(images, labels[:-1])


def test_image_to_sequence_satisfies_invariants():
    images, labels = generate_corpus(10, seed=19)
    for px, label in zip(images, labels):
        seq = image_to_sequence(gray(px), label)
        seq.validate()
        assert seq.label == label

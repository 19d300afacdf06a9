"""The four regimes: initial limits, views, and the doubling rule."""

from __future__ import annotations

import numpy as np
import pytest

from strokeforge.curriculum import (
    CurriculumKind,
    effective_dataset,
    initial_state,
    on_epoch_end,
    visible_fraction,
)
from strokeforge.strokes import END_OF_DIGIT, PenStep, StrokeSequence


def make_seq(length: int, label: int) -> StrokeSequence:
    steps = [PenStep(1, 0, 0, 0) for _ in range(length - 1)] + [END_OF_DIGIT]
    return StrokeSequence(steps=steps, label=label)


@pytest.fixture
def corpus() -> list[StrokeSequence]:
    rng = np.random.default_rng(0)
    return [make_seq(int(rng.integers(2, 40)), label=i % 10) for i in range(60)]


def test_initial_limits_per_kind():
    assert initial_state(CurriculumKind.LENGTH).limit == 2
    assert initial_state(CurriculumKind.SET_SIZE).limit == 10
    assert initial_state(CurriculumKind.CLASSES).limit == 1
    assert initial_state(CurriculumKind.REGULAR).limit is None


def test_regular_view_is_full_dataset(corpus):
    state = initial_state(CurriculumKind.REGULAR)
    assert effective_dataset(state, corpus) == corpus


def test_length_view_items_are_exact_prefixes(corpus):
    state = initial_state(CurriculumKind.LENGTH)
    view = effective_dataset(state, corpus)
    assert len(view) == len(corpus)
    for source, item in zip(corpus, view):
        assert len(item) == min(2, len(source))
        assert item.steps == source.steps[: len(item)]
        assert item.num_points == 1  # predict step 2 from step 1
        assert item.label == source.label
    # no fabricated terminator at the cut
    assert any(item.steps[-1].eod == 0 for item in view)


def test_classes_view_starts_with_zeros_only(corpus):
    state = initial_state(CurriculumKind.CLASSES)
    view = effective_dataset(state, corpus)
    assert view and all(seq.label == 0 for seq in view)


def test_set_size_view_is_prefix_of_fixed_shuffle(corpus):
    state = initial_state(CurriculumKind.SET_SIZE, seed=5)
    first = effective_dataset(state, corpus)
    assert len(first) == 10
    state.limit = 20
    second = effective_dataset(state, corpus)
    assert second[:10] == first  # membership only ever grows
    again = effective_dataset(initial_state(CurriculumKind.SET_SIZE, seed=5), corpus)
    assert again == first  # the shuffle is fixed by the seed


def test_saturated_views_equal_regular(corpus):
    for kind in (CurriculumKind.LENGTH, CurriculumKind.SET_SIZE, CurriculumKind.CLASSES):
        state = initial_state(kind)
        effective_dataset(state, corpus)
        assert state.maximum is not None
        state.limit = state.maximum
        view = effective_dataset(state, corpus)
        if kind is CurriculumKind.SET_SIZE:
            assert sorted(id(s) for s in view) == sorted(id(s) for s in corpus)
        else:
            assert view == corpus


def test_advancement_doubles_below_threshold(corpus):
    state = initial_state(CurriculumKind.LENGTH)
    effective_dataset(state, corpus)
    on_epoch_end(state, 3.9, points_processed=1234)
    assert state.limit == 4
    assert state.advancement_log[-1] == (1234, 4)


def test_advancement_requires_strictly_below(corpus):
    state = initial_state(CurriculumKind.LENGTH)
    effective_dataset(state, corpus)
    on_epoch_end(state, 4.0)
    assert state.limit == 2


def test_classes_clamp_from_eight_to_ten(corpus):
    state = initial_state(CurriculumKind.CLASSES)
    state.limit = 8
    on_epoch_end(state, 1.0)
    assert state.limit == 10


def test_regular_never_advances(corpus):
    state = initial_state(CurriculumKind.REGULAR)
    effective_dataset(state, corpus)
    for _ in range(5):
        on_epoch_end(state, 0.0)
    assert state.limit is None
    assert state.advancement_log == []


def test_advancement_rejects_negative_rmse(corpus):
    state = initial_state(CurriculumKind.LENGTH)
    with pytest.raises(ValueError):
        on_epoch_end(state, -1.0)


def test_limits_monotone_and_saturate_on_random_trajectories(corpus):
    rng = np.random.default_rng(42)
    kinds = [CurriculumKind.LENGTH, CurriculumKind.SET_SIZE, CurriculumKind.CLASSES]
    for trial in range(300):
        kind = kinds[trial % 3]
        state = initial_state(kind, seed=trial)
        effective_dataset(state, corpus)
        limits = [state.limit]
        for _ in range(12):
            on_epoch_end(state, float(rng.uniform(0, 8)), points_processed=trial)
            limits.append(state.limit)
        assert all(a <= b for a, b in zip(limits, limits[1:]))
        assert limits[-1] <= state.maximum
        for (_, before), (_, after) in zip(state.advancement_log, state.advancement_log[1:]):
            assert after == min(before * 2, state.maximum)
        if state.saturated:
            assert len(effective_dataset(state, corpus)) == len(corpus)


def test_visible_fraction_reconstructable(corpus):
    state = initial_state(CurriculumKind.LENGTH)
    effective_dataset(state, corpus)
    early = visible_fraction(state, corpus)
    assert 0 < early < 1
    state.limit = state.maximum
    assert visible_fraction(state, corpus) == 1.0

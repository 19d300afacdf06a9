"""The four training regimes: regular plus three growing-curriculum views.

A curriculum exposes a filtered view of the training data (sequence
prefixes, a growing subset, or a growing class range) and doubles its
limit whenever the epoch's training RMSE drops strictly below the
threshold of 4 pixels, clamped at the natural maximum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .seeding import derive_seed
from .strokes import StrokeSequence

RMSE_THRESHOLD = 4.0


class CurriculumKind(str, Enum):
    REGULAR = "regular"
    LENGTH = "incremental_length"
    SET_SIZE = "incremental_set_size"
    CLASSES = "incremental_classes"


_INITIAL_LIMITS = {
    CurriculumKind.LENGTH: 2,
    CurriculumKind.SET_SIZE: 10,
    CurriculumKind.CLASSES: 1,
}


@dataclass
class CurriculumState:
    """Which slice of the training data is currently visible.

    ``limit`` is a prefix length, subset size, or class count depending on
    the kind; ``None`` for the regular regime, which never filters. The
    advancement log records (points_processed, new_limit) pairs, starting
    with the initial limit, so the visible-data fraction over a run can be
    reconstructed from the log alone.
    """

    kind: CurriculumKind
    limit: int | None
    threshold: float = RMSE_THRESHOLD
    maximum: int | None = None
    advancement_log: list[tuple[int, int]] = field(default_factory=list)
    seed: int = 0
    subset_order: list[int] | None = None

    @property
    def saturated(self) -> bool:
        if self.kind is CurriculumKind.REGULAR:
            return True
        return self.maximum is not None and self.limit is not None and self.limit >= self.maximum


def initial_state(kind: CurriculumKind | str, seed: int = 0) -> CurriculumState:
    """Starting limits: prefix length 2, subset size 10, one class."""
    kind = CurriculumKind(kind)
    limit = _INITIAL_LIMITS.get(kind)
    log = [] if limit is None else [(0, limit)]
    maximum = 10 if kind is CurriculumKind.CLASSES else None
    return CurriculumState(kind=kind, limit=limit, maximum=maximum, advancement_log=log, seed=seed)


def bind_dataset(state: CurriculumState, full: list[StrokeSequence]) -> None:
    """Fix the state's natural maximum (and subset order) to a dataset."""
    if state.kind is CurriculumKind.LENGTH and state.maximum is None:
        state.maximum = max(len(seq) for seq in full)
    elif state.kind is CurriculumKind.SET_SIZE:
        if state.maximum is None:
            state.maximum = len(full)
        if state.subset_order is None:
            rng = np.random.default_rng(derive_seed(state.seed, "curriculum-subset"))
            state.subset_order = [int(i) for i in rng.permutation(len(full))]


def effective_dataset(state: CurriculumState, full: list[StrokeSequence]) -> list[StrokeSequence]:
    """The training items currently visible under the curriculum.

    Length prefixes are bitwise prefixes of the source steps with no
    end-of-digit fabricated at the cut; the subset view is a prefix of one
    fixed seeded shuffle, so it only ever grows; the class view admits
    labels below the limit in numeric digit order.
    """
    if not full:
        raise ValueError("training dataset is empty")
    bind_dataset(state, full)
    if state.kind is CurriculumKind.REGULAR:
        return list(full)
    assert state.limit is not None
    if state.kind is CurriculumKind.LENGTH:
        return [
            StrokeSequence(steps=seq.steps[: min(state.limit, len(seq))], label=seq.label)
            for seq in full
        ]
    if state.kind is CurriculumKind.SET_SIZE:
        assert state.subset_order is not None
        return [full[i] for i in state.subset_order[: state.limit]]
    return [seq for seq in full if seq.label is not None and seq.label < state.limit]


def on_epoch_end(
    state: CurriculumState, train_rmse: float, points_processed: int = 0
) -> CurriculumState:
    """Double the limit when the epoch's training RMSE fell below threshold.

    Strict comparison, clamped to the natural maximum; the regular regime
    never advances. ``points_processed`` is recorded in the advancement
    log.
    """
    if train_rmse < 0:
        raise ValueError(f"train_rmse must be nonnegative, got {train_rmse}")
    if state.kind is CurriculumKind.REGULAR or state.saturated:
        return state
    if train_rmse < state.threshold:
        if state.maximum is None:
            raise ValueError("curriculum maximum unknown; call effective_dataset first")
        assert state.limit is not None
        state.limit = min(state.limit * 2, state.maximum)
        state.advancement_log.append((points_processed, state.limit))
    return state


def visible_fraction(state: CurriculumState, full: list[StrokeSequence]) -> float:
    """Fraction of the full dataset's points visible under the current limit."""
    total = sum(seq.num_points for seq in full)
    if total == 0:
        return 0.0
    view = effective_dataset(state, full)
    return sum(seq.num_points for seq in view) / total

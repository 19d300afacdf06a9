"""Stroke sequence invariants and the dataset file round trip."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strokeforge.strokes import (
    END_OF_DIGIT,
    PEN_LIFT,
    PenStep,
    StrokeFormatError,
    StrokeSequence,
    read_dataset,
    write_dataset,
)
from synthdigits import synthetic_sequences


def seq(steps, label=3) -> StrokeSequence:
    return StrokeSequence(steps=list(steps), label=label)


def test_validate_accepts_canonical_sequence():
    seq([PenStep(6, 4, 0, 0), PenStep(1, -1, 0, 0), END_OF_DIGIT]).validate()


def test_validate_rejects_interior_eod():
    s = seq([PenStep(1, 1, 0, 0), END_OF_DIGIT, PenStep(1, 0, 0, 0), END_OF_DIGIT])
    with pytest.raises(StrokeFormatError, match="interior eod"):
        s.validate()


def test_validate_rejects_nonzero_eos_offsets():
    with pytest.raises(StrokeFormatError, match="zero offsets"):
        seq([PenStep(1, 0, 1, 0), END_OF_DIGIT]).validate()


def test_validate_rejects_eod_without_eos():
    with pytest.raises(StrokeFormatError, match="requires eos"):
        seq([PenStep(0, 0, 0, 1)]).validate()


def test_validate_rejects_missing_terminator():
    with pytest.raises(StrokeFormatError, match=r"\(0,0,1,1\)"):
        seq([PenStep(1, 1, 0, 0)]).validate()


def test_validate_rejects_bad_label():
    s = seq([END_OF_DIGIT], label=10)
    with pytest.raises(StrokeFormatError, match="label"):
        s.validate()


def test_num_points_is_length_minus_one():
    s = seq([PenStep(1, 1, 0, 0), PEN_LIFT, PenStep(2, 2, 0, 0), END_OF_DIGIT])
    assert s.num_points == 3


def test_write_read_round_trip(tmp_path):
    sequences = [
        seq([PenStep(6, 4, 0, 0), PenStep(1, -1, 0, 0), END_OF_DIGIT], label=7),
        seq([PenStep(3, 5, 0, 0), PEN_LIFT, PenStep(-2, 0, 0, 0), END_OF_DIGIT], label=0),
    ]
    path = tmp_path / "strokes.txt"
    write_dataset(sequences, path)
    loaded = read_dataset(path)
    assert loaded == sequences


def test_write_format_is_exactly_as_specified(tmp_path):
    path = tmp_path / "one.txt"
    write_dataset([seq([PenStep(2, -3, 0, 0), END_OF_DIGIT], label=5)], path)
    assert path.read_text() == "# label 5\n2,-3,0,0\n0,0,1,1\n\n"


def test_empty_dataset_round_trip(tmp_path):
    path = tmp_path / "empty.txt"
    write_dataset([], path)
    assert path.read_bytes() == b""
    assert read_dataset(path) == []


def test_converted_corpus_round_trips_bit_exactly(tmp_path):
    sequences = synthetic_sequences(60, seed=4)
    path = tmp_path / "corpus.txt"
    write_dataset(sequences, path)
    assert read_dataset(path) == sequences
    # a second write of the loaded data is byte-identical
    again = tmp_path / "again.txt"
    write_dataset(read_dataset(path), again)
    assert again.read_bytes() == path.read_bytes()


def test_read_reports_file_and_line_on_damage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# label 3\n1,2,0,0\n0,0,1,1\n\n# label 4\n1,oops,0,0\n0,0,1,1\n\n")
    with pytest.raises(StrokeFormatError, match=r"bad\.txt:6"):
        read_dataset(path)


def test_read_rejects_unterminated_file(tmp_path):
    path = tmp_path / "cut.txt"
    path.write_text("# label 3\n1,2,0,0\n0,0,1,1\n")
    with pytest.raises(StrokeFormatError, match="mid-sequence"):
        read_dataset(path)


def test_write_refuses_unlabelled(tmp_path):
    with pytest.raises(StrokeFormatError, match="no label"):
        write_dataset([StrokeSequence(steps=[END_OF_DIGIT], label=None)], tmp_path / "x.txt")


def test_missing_file_error_names_path(tmp_path):
    with pytest.raises(OSError, match="nope.txt"):
        read_dataset(tmp_path / "nope.txt")


@st.composite
def stroke_sequences(draw):
    moves = draw(
        st.lists(
            st.tuples(st.integers(-27, 27), st.integers(-27, 27), st.sampled_from([0, 0, 0, 1])),
            min_size=0,
            max_size=30,
        )
    )
    steps = [PenStep(0, 0, 1, 0) if eos else PenStep(dx, dy, 0, 0) for dx, dy, eos in moves]
    steps.append(END_OF_DIGIT)
    return StrokeSequence(steps=steps, label=draw(st.integers(0, 9)))


@settings(max_examples=60, deadline=None)
@given(st.lists(stroke_sequences(), min_size=0, max_size=8))
def test_round_trip_property(tmp_path_factory, sequences):
    path = tmp_path_factory.mktemp("hyp") / "data.txt"
    write_dataset(sequences, path)
    assert read_dataset(path) == sequences

"""Pen-stroke sequence types and the on-disk dataset format.

A digit is a sequence of (dx, dy, eos, eod) steps: pen offsets in pixel
units (x rightward, y downward), an end-of-stroke flag marking pen lifts,
and an end-of-digit flag on the final step. The text dataset format
defined here is the contract consumed by every downstream module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple


class PenStep(NamedTuple):
    dx: int
    dy: int
    eos: int
    eod: int


#: Pen lift between strokes of the same digit.
PEN_LIFT = PenStep(0, 0, 1, 0)
#: Terminator appended to every digit sequence.
END_OF_DIGIT = PenStep(0, 0, 1, 1)


class StrokeFormatError(ValueError):
    """A sequence or dataset file violates the stroke-format contract."""


def validate_step(step: PenStep) -> None:
    if step.eos not in (0, 1) or step.eod not in (0, 1):
        raise StrokeFormatError(f"eos/eod must be 0 or 1, got {step!r}")
    if step.eod == 1 and step.eos != 1:
        raise StrokeFormatError(f"eod=1 requires eos=1: {step!r}")
    if step.eos == 1 and (step.dx != 0 or step.dy != 0):
        raise StrokeFormatError(f"eos step must have zero offsets: {step!r}")


@dataclass
class StrokeSequence:
    """One digit's steps plus its class label.

    ``label`` is ``None`` for sequences produced by unguided generation;
    labelled sequences carry a digit class 0-9. Curriculum views construct
    truncated prefixes directly, so validation is explicit rather than
    implicit in the constructor.
    """

    steps: list[PenStep] = field(default_factory=list)
    label: int | None = None

    def validate(self) -> None:
        if not self.steps:
            raise StrokeFormatError("sequence must contain at least one step")
        if self.label is not None and not 0 <= self.label <= 9:
            raise StrokeFormatError(f"label must be 0-9, got {self.label}")
        for i, step in enumerate(self.steps):
            validate_step(step)
            if step.eod == 1 and i != len(self.steps) - 1:
                raise StrokeFormatError(f"interior eod at step {i}")
        if self.steps[-1] != END_OF_DIGIT:
            raise StrokeFormatError(
                f"sequence must end with (0,0,1,1), got {self.steps[-1]!r}"
            )

    @property
    def num_points(self) -> int:
        """Input-to-target pairs this sequence contributes (length - 1)."""
        return len(self.steps) - 1

    def __len__(self) -> int:
        return len(self.steps)


def write_dataset(sequences: Iterable[StrokeSequence], path: str | Path) -> None:
    """Write sequences in the text dataset format.

    Per sequence: a header line ``# label <digit>``, one ``dx,dy,eos,eod``
    line per step, then one blank line. An empty dataset writes an empty
    file. Unlabelled sequences are not representable and are rejected.
    """
    path = Path(path)
    lines: list[str] = []
    for i, seq in enumerate(sequences):
        if seq.label is None:
            raise StrokeFormatError(f"sequence {i} has no label; cannot be written")
        seq.validate()
        lines.append(f"# label {seq.label}")
        for step in seq.steps:
            lines.append(f"{step.dx},{step.dy},{step.eos},{step.eod}")
        lines.append("")
    try:
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write dataset file {path}: {exc}") from exc


def read_dataset(path: str | Path) -> list[StrokeSequence]:
    """Read a stroke dataset file; inverse of :func:`write_dataset`."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read dataset file {path}: {exc}") from exc

    sequences: list[StrokeSequence] = []
    label: int | None = None
    steps: list[PenStep] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("# label "):
            if label is not None:
                raise StrokeFormatError(
                    f"{path}:{lineno}: new header before blank line ended previous sequence"
                )
            try:
                label = int(line[len("# label "):])
            except ValueError:
                raise StrokeFormatError(f"{path}:{lineno}: bad label line {line!r}") from None
            steps = []
        elif line == "":
            if label is None:
                continue
            seq = StrokeSequence(steps=steps, label=label)
            try:
                seq.validate()
            except StrokeFormatError as exc:
                raise StrokeFormatError(f"{path}:{lineno}: {exc}") from None
            sequences.append(seq)
            label = None
        else:
            if label is None:
                raise StrokeFormatError(f"{path}:{lineno}: step line outside a sequence")
            parts = line.split(",")
            if len(parts) != 4:
                raise StrokeFormatError(f"{path}:{lineno}: expected dx,dy,eos,eod, got {line!r}")
            try:
                step = PenStep(*(int(p) for p in parts))
            except ValueError:
                raise StrokeFormatError(f"{path}:{lineno}: non-integer step {line!r}") from None
            steps.append(step)
    if label is not None:
        raise StrokeFormatError(f"{path}: file ends mid-sequence (missing blank line)")
    return sequences

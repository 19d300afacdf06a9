"""Post-training behavior: guided prediction traces, unguided generation
with outputs fed back as inputs, per-step classification traces, and
SVG/PGM figure emission.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .model import MdnOutput, SequenceModel, mdn_transform, point_estimate, sample_step
from .pipeline import BinaryImage
from .strokes import END_OF_DIGIT, PenStep, StrokeSequence

DEFAULT_MAX_STEPS = 200


def predict_guided(
    model: SequenceModel, sequence: StrokeSequence | list[PenStep]
) -> list[tuple[float, float, float, float]]:
    """Teacher-forced per-step (dx, dy, eos_p, eod_p), offsets in pixels."""
    steps = sequence.steps if isinstance(sequence, StrokeSequence) else sequence
    trace = []
    for out in model.sequence_outputs(steps):
        dx, dy = point_estimate(out, model.config.scale)
        trace.append((dx, dy, out.eos_p, out.eod_p))
    return trace


def generate_unguided(
    model: SequenceModel,
    rng: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
    temperature: float = 1.0,
) -> StrokeSequence:
    """Free-run the model, feeding each sampled step back as the next input.

    Starts from the zero input and stops at a sampled end-of-digit or at
    ``max_steps``, appending the terminator in the latter case.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    cfg = model.config
    scale = cfg.scale
    steps: list[PenStep] = []
    current = np.zeros((1, 1, 4))
    state = _RecurrentState(model)
    for _ in range(max_steps):
        out = state.step(current)
        step = sample_step(out, rng, scale=scale, temperature=temperature)
        steps.append(step)
        if step.eod:
            break
        current = np.array([[[step.dx / scale, step.dy / scale, step.eos, step.eod]]], dtype=np.float64)
    if not steps[-1].eod:
        steps.append(END_OF_DIGIT)
    return StrokeSequence(steps=steps, label=None)


class _RecurrentState:
    """Stepwise evaluation that carries hidden state between inputs."""

    def __init__(self, model: SequenceModel) -> None:
        self.model = model
        self.h = [np.zeros((1, spec.hidden_size)) for spec in model.specs]
        self.c = [np.zeros((1, spec.hidden_size)) for spec in model.specs]

    def step(self, x: np.ndarray) -> MdnOutput:
        from . import net

        layer_in = x[:, 0, :]
        for li, spec in enumerate(self.model.specs):
            prefix = f"layer{li}"
            params = self.model.params
            if spec.kind == "lstm":
                h, c, _ = net.lstm_cell_forward(
                    layer_in, self.h[li], self.c[li],
                    params[f"{prefix}.wx"], params[f"{prefix}.wh"], params[f"{prefix}.b"],
                )
                self.h[li] = h
                self.c[li] = c
                layer_in = h
            else:
                layer_in, _ = net.ff_cell_forward(layer_in, params[f"{prefix}.wx"], params[f"{prefix}.b"])
        raw = layer_in @ self.model.params["out.w"] + self.model.params["out.b"]
        return mdn_transform(raw[0], self.model.config.num_mixtures)


def classify_trace(model: SequenceModel, sequence: StrokeSequence | list[PenStep]) -> np.ndarray:
    """Class distribution after each input step; shape (len, 10)."""
    steps = sequence.steps if isinstance(sequence, StrokeSequence) else sequence
    return np.stack([out.class_p for out in model.sequence_outputs(steps)])


# ---------------------------------------------------------------------------
# Figure emission.
# ---------------------------------------------------------------------------

SVG_CELL = 28
SVG_SCALE = 8
SVG_PAD = 4


def _strokes_of(steps) -> list[list[tuple[float, float]]]:
    """Split a step sequence into per-stroke absolute point lists."""
    strokes: list[list[tuple[float, float]]] = []
    current: list[tuple[float, float]] = []
    x = y = 0.0
    for step in steps:
        dx, dy = step[0], step[1]
        eos = step[2]
        x += dx
        y += dy
        if eos:
            if current:
                strokes.append(current)
            current = []
        else:
            current.append((x, y))
    if current:
        strokes.append(current)
    return strokes


def render_svg(sequences: list) -> str:
    """Sequences as one SVG group each, polylines broken at pen lifts.

    Accepts StrokeSequence objects or plain (dx, dy, eos, eod) step lists
    (offsets may be floats, e.g. guided prediction traces).
    """
    groups = []
    for i, seq in enumerate(sequences):
        steps = seq.steps if isinstance(seq, StrokeSequence) else seq
        shapes = []
        for stroke in _strokes_of(steps):
            pts = [(x * SVG_SCALE, y * SVG_SCALE) for x, y in stroke]
            if len(pts) == 1:
                shapes.append(
                    f'<circle cx="{pts[0][0]:.2f}" cy="{pts[0][1]:.2f}" r="{SVG_SCALE / 2:.2f}" fill="black"/>'
                )
            else:
                coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
                shapes.append(
                    f'<polyline points="{coords}" fill="none" stroke="black" '
                    f'stroke-width="{SVG_SCALE / 4:.2f}" stroke-linecap="round" stroke-linejoin="round"/>'
                )
        offset = i * (SVG_CELL + SVG_PAD) * SVG_SCALE
        groups.append(f'<g transform="translate({offset},0)">' + "".join(shapes) + "</g>")
    width = max(1, len(sequences)) * (SVG_CELL + SVG_PAD) * SVG_SCALE
    height = SVG_CELL * SVG_SCALE
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n' + "\n".join(groups) + "\n</svg>\n"
    )


def render_pgm(img: BinaryImage) -> bytes:
    """Binary image as P5 PGM bytes, ink black on white."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    body = ((1 - img.bits) * 255).astype(np.uint8).tobytes()
    return header + body


def read_pgm(data: bytes) -> BinaryImage:
    """Inverse of render_pgm: dark pixels become ink."""
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise ValueError("not a P5 PGM stream")
    width, height = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    pixels = np.frombuffer(parts[3][: width * height], dtype=np.uint8).reshape(height, width)
    return BinaryImage((pixels < maxval // 2).astype(np.uint8))


def write_pgm(img: BinaryImage, path: str | Path) -> None:
    Path(path).write_bytes(render_pgm(img))

"""Training orchestration: batching, optimization, metrics, checkpoints.

A run is fully determined by (seed, config, data): shuffles derive from the
seed and epoch index, the optimizer and evaluation order are fixed, and
checkpoints capture enough state that a resumed run reproduces the
uninterrupted one bit-exactly.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, TextIO

import numpy as np

from . import curriculum as curr
from .model import (
    BatchLossTerms,
    ModelConfig,
    SequenceModel,
    batch_loss_terms,
    max_abs_weight,
    per_point_prediction_terms,
)
from .net import GradStore, ShapeError, softmax
from .seeding import derive_seed
from .strokes import StrokeSequence

log = logging.getLogger(__name__)

CHECKPOINT_HEADER = "strokeforge-checkpoint v1"
METRICS_HEADER = "points,epoch,train_rmse,test_rmse,train_loss,test_loss,accuracy,limit,seconds"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
EVAL_CHUNK = 500


class TrainingAborted(RuntimeError):
    """Training hit a non-finite loss; a post-mortem checkpoint was saved."""

    def __init__(self, message: str, checkpoint_path: Path | None = None) -> None:
        super().__init__(message)
        self.checkpoint_path = checkpoint_path


class CheckpointError(ValueError):
    """A checkpoint file is malformed, truncated, or mismatched."""


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    learning_rate: float = 0.0025
    decay: float = 0.99995
    reg_lambda: float = 0.25
    batch_mode: str = "sequences"  # or "points"
    batch_size: int = 50
    curriculum: str = "regular"
    task_mode: str = "prediction"  # or "classification"
    beta: int = 1
    gamma: float = 10.0
    seed: int = 0
    budget_points: int = 1_000_000
    clip_norm: float = 5.0
    eval_every_batches: int = 20

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must lie in (0, 1]")
        if self.batch_mode not in ("sequences", "points"):
            raise ValueError(f"batch_mode must be 'sequences' or 'points', got {self.batch_mode!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.task_mode not in ("prediction", "classification"):
            raise ValueError(f"task_mode must be 'prediction' or 'classification', got {self.task_mode!r}")
        if self.beta not in (0, 1):
            raise ValueError("beta must be 0 or 1")
        if self.reg_lambda < 0 or self.gamma < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.budget_points < 0:
            raise ValueError("budget_points must be nonnegative")
        curr.CurriculumKind(self.curriculum)


@dataclass
class MetricsRecord:
    points: int
    epoch: int
    train_rmse: float
    test_rmse: float
    train_loss: float
    test_loss: float
    accuracy: float
    limit: int | None
    seconds: float

    def to_csv_row(self) -> str:
        limit = "inf" if self.limit is None else str(self.limit)
        floats = [self.train_rmse, self.test_rmse, self.train_loss, self.test_loss, self.accuracy]
        body = ",".join(f"{v:.17g}" for v in floats)
        return f"{self.points},{self.epoch},{body},{limit},{self.seconds:.17g}"


@dataclass
class Batch:
    inputs: np.ndarray  # (B, T, 4), offsets scaled
    targets: np.ndarray  # (B, T, 4), offsets scaled
    mask: np.ndarray  # (B, T) in {0.0, 1.0}
    labels: np.ndarray  # (B,)
    num_points: int


def pack_batch(sequences: list[StrokeSequence], scale: float) -> Batch:
    """Stack sequences into padded teacher-forcing arrays.

    Step t is the input for predicting step t+1, so a k-step sequence
    yields k-1 columns; shorter sequences are padded and masked out.
    """
    usable = [s for s in sequences if len(s) >= 2]
    if not usable:
        raise ValueError("batch has no sequences with at least 2 steps")
    batch = len(usable)
    width = max(len(s) - 1 for s in usable)
    inputs = np.zeros((batch, width, 4))
    targets = np.zeros((batch, width, 4))
    mask = np.zeros((batch, width))
    labels = np.zeros(batch, dtype=np.int64)
    for b, seq in enumerate(usable):
        arr = np.array([(st.dx / scale, st.dy / scale, st.eos, st.eod) for st in seq.steps])
        k = len(seq) - 1
        inputs[b, :k] = arr[:-1]
        targets[b, :k] = arr[1:]
        mask[b, :k] = 1.0
        labels[b] = -1 if seq.label is None else seq.label
    return Batch(inputs, targets, mask, labels, int(mask.sum()))


def make_batches(
    view: list[StrokeSequence], batch_mode: str, batch_size: int, seed: int, epoch: int
) -> list[list[StrokeSequence]]:
    """Shuffle sequence order for the epoch and group into batches.

    Sequences mode groups a fixed count per batch; points mode fills each
    batch until it holds at least ``batch_size`` points (a k-step sequence
    contributes k-1), never splitting a sequence. Sequences too short to
    contribute a point are skipped.
    """
    usable = [s for s in view if len(s) >= 2]
    dropped = len(view) - len(usable)
    if dropped:
        log.info("skipping %d length-1 sequences (no prediction targets)", dropped)
    if not usable:
        raise ValueError("no sequences with at least 2 steps to train on")
    rng = np.random.default_rng(derive_seed(seed, f"shuffle:{epoch}"))
    order = rng.permutation(len(usable))
    shuffled = [usable[int(i)] for i in order]

    batches: list[list[StrokeSequence]] = []
    if batch_mode == "sequences":
        for start in range(0, len(shuffled), batch_size):
            batches.append(shuffled[start:start + batch_size])
    else:
        current: list[StrokeSequence] = []
        points = 0
        for seq in shuffled:
            current.append(seq)
            points += seq.num_points
            if points >= batch_size:
                batches.append(current)
                current = []
                points = 0
        if current:
            batches.append(current)
    return batches


# ---------------------------------------------------------------------------
# Optimizer.
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: GradStore
    v: GradStore
    t: int = 0

    @classmethod
    def fresh(cls, params) -> "AdamState":
        return cls(m=params.new_grads(), v=params.new_grads())


def adam_step(params, grads: GradStore, state: AdamState, lr: float) -> None:
    state.t += 1
    bias1 = 1.0 - ADAM_BETA1 ** state.t
    bias2 = 1.0 - ADAM_BETA2 ** state.t
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        params[name] -= lr * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)


# ---------------------------------------------------------------------------
# Evaluation.
# ---------------------------------------------------------------------------

def _point_estimates_px(raw: np.ndarray, num_mixtures: int, scale: float) -> np.ndarray:
    m = num_mixtures
    pis = softmax(raw[..., :m])
    est_x = (pis * raw[..., m:2 * m]).sum(axis=-1) * scale
    est_y = (pis * raw[..., 2 * m:3 * m]).sum(axis=-1) * scale
    return np.stack([est_x, est_y], axis=-1)


@dataclass
class EvalResult:
    rmse: float
    loss_per_point: float
    accuracy: float
    num_points: int
    skipped: int


def evaluate_metrics(
    model: SequenceModel,
    dataset: list[StrokeSequence],
    task_mode: str = "prediction",
    beta: int = 1,
    gamma: float = 10.0,
) -> EvalResult:
    """Teacher-forced pixel RMSE, per-point loss, and final-step accuracy.

    The RMSE covers the offset components only, rescaled to pixel units;
    the classification answer is read at the one-but-last step. Length-1
    sequences are skipped and counted.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    usable = [s for s in dataset if len(s) >= 2]
    skipped = len(dataset) - len(usable)
    if not usable:
        raise ValueError("dataset has no sequences with at least 2 steps")
    cfg = model.config
    sq_sum = 0.0
    points = 0
    pred_sum = 0.0
    class_sum = 0.0
    correct = 0
    for start in range(0, len(usable), EVAL_CHUNK):
        chunk = usable[start:start + EVAL_CHUNK]
        batch = pack_batch(chunk, cfg.scale)
        raw, _ = model.forward_raw(batch.inputs)
        est = _point_estimates_px(raw, cfg.num_mixtures, cfg.scale)
        diff = est - batch.targets[..., :2] * cfg.scale
        sq_sum += float(((diff ** 2).sum(axis=-1) * batch.mask).sum())
        points += batch.num_points
        pred_sum += float(per_point_prediction_terms(raw, batch.targets, batch.mask, cfg.num_mixtures).sum())
        last = batch.mask.sum(axis=1).astype(int) - 1
        rows = np.arange(len(chunk))
        class_logits = raw[rows, last, 6 * cfg.num_mixtures + 2:]
        correct += int((np.argmax(class_logits, axis=1) == batch.labels).sum())
        if task_mode == "classification":
            terms = batch_loss_terms(
                raw, batch.targets, batch.mask, batch.labels, cfg.num_mixtures,
                mode="classification", beta=beta, gamma=gamma,
            )
            class_sum += terms.classification_sum
    rmse = math.sqrt(sq_sum / (2.0 * points))
    if task_mode == "classification":
        loss_pp = (class_sum + beta * pred_sum) / points
    else:
        loss_pp = pred_sum / points
    return EvalResult(
        rmse=rmse,
        loss_per_point=loss_pp,
        accuracy=correct / len(usable),
        num_points=points,
        skipped=skipped,
    )


def evaluate_rmse(model: SequenceModel, dataset: list[StrokeSequence]) -> float:
    """Pixel-unit RMSE of teacher-forced offset predictions."""
    return evaluate_metrics(model, dataset).rmse


def evaluate_accuracy(model: SequenceModel, dataset: list[StrokeSequence]) -> float:
    """Fraction of sequences whose one-but-last-step class argmax is right."""
    return evaluate_metrics(model, dataset).accuracy


def loss_by_position(
    model: SequenceModel, dataset: list[StrokeSequence], max_position: int
) -> list[float]:
    """Mean per-step prediction loss at sequence positions 1..max_position.

    Position t is the prediction made after receiving step t; each mean
    averages over the sequences that reach that position. Positions no
    sequence reaches come back as NaN.
    """
    usable = [s for s in dataset if len(s) >= 2]
    if not usable:
        raise ValueError("dataset has no sequences with at least 2 steps")
    sums = np.zeros(max_position)
    counts = np.zeros(max_position)
    cfg = model.config
    for start in range(0, len(usable), EVAL_CHUNK):
        chunk = usable[start:start + EVAL_CHUNK]
        batch = pack_batch(chunk, cfg.scale)
        raw, _ = model.forward_raw(batch.inputs)
        terms = per_point_prediction_terms(raw, batch.targets, batch.mask, cfg.num_mixtures)
        width = min(max_position, terms.shape[1])
        sums[:width] += terms[:, :width].sum(axis=0)
        counts[:width] += batch.mask[:, :width].sum(axis=0)
    with np.errstate(invalid="ignore"):
        return [float(s / c) if c > 0 else float("nan") for s, c in zip(sums, counts)]


# ---------------------------------------------------------------------------
# The training loop.
# ---------------------------------------------------------------------------

class Trainer:
    """Owns the model, optimizer, curriculum, and run counters."""

    def __init__(
        self,
        config: TrainConfig,
        model: SequenceModel | None = None,
        clock: Callable[[], float] = time.perf_counter,
    ) -> None:
        self.config = config
        self.clock = clock
        self.model = model or SequenceModel.initialize(config.model, derive_seed(config.seed, "init"))
        self.adam = AdamState.fresh(self.model.params)
        self.state = curr.initial_state(config.curriculum, seed=config.seed)
        self.rng = np.random.default_rng(derive_seed(config.seed, "model-rng"))
        self.points_processed = 0
        self.batch_counter = 0
        self.epoch = 0
        self.batch_in_epoch = 0
        self.initial_eval_done = False
        self.last_emit_points = -1
        self._epoch_sq = 0.0
        self._epoch_points = 0
        self._epoch_pred = 0.0
        self._epoch_class = 0.0

    @property
    def current_lr(self) -> float:
        """Learning rate for the current epoch: alpha * decay**epoch."""
        return self.config.learning_rate * self.config.decay ** self.epoch

    # -- loss plumbing ------------------------------------------------------

    def _objective_sum(self, terms: BatchLossTerms) -> float:
        if self.config.task_mode == "prediction":
            return terms.prediction_sum
        return terms.classification_sum + self.config.beta * terms.prediction_sum

    def _regularizer_active(self) -> bool:
        if self.config.reg_lambda == 0.0:
            return False
        return self.config.task_mode == "prediction" or self.config.beta == 1

    def _train_batch(self, sequences: list[StrokeSequence], lr: float) -> None:
        cfg = self.config
        batch = pack_batch(sequences, cfg.model.scale)
        raw, cache = self.model.forward_raw(batch.inputs)
        terms = batch_loss_terms(
            raw, batch.targets, batch.mask, batch.labels, cfg.model.num_mixtures,
            mode=cfg.task_mode, beta=cfg.beta, gamma=cfg.gamma,
        )
        objective = self._objective_sum(terms)
        if not math.isfinite(objective):
            raise FloatingPointError(f"non-finite loss at {self.points_processed} points")
        grads = self.model.backward_from_raw(cache, terms.d_raw / terms.num_points)
        if self._regularizer_active():
            _, name, idx = max_abs_weight(self.model.params)
            if name is not None:
                sign = 1.0 if self.model.params[name].flat[idx] >= 0 else -1.0
                grads[name].flat[idx] += cfg.reg_lambda * sign
        grads.clip_global_norm(cfg.clip_norm)
        adam_step(self.model.params, grads, self.adam, lr)

        est = _point_estimates_px(raw, cfg.model.num_mixtures, cfg.model.scale)
        diff = est - batch.targets[..., :2] * cfg.model.scale
        self._epoch_sq += float(((diff ** 2).sum(axis=-1) * batch.mask).sum())
        self._epoch_points += terms.num_points
        self._epoch_pred += terms.prediction_sum
        self._epoch_class += terms.classification_sum
        if terms.floored:
            log.debug("%d probability-floor events in batch", terms.floored)
        self.points_processed += terms.num_points
        self.batch_counter += 1

    def _running_train_metrics(self) -> tuple[float, float]:
        if self._epoch_points == 0:
            return float("nan"), float("nan")
        rmse = math.sqrt(self._epoch_sq / (2.0 * self._epoch_points))
        if self.config.task_mode == "prediction":
            loss = self._epoch_pred / self._epoch_points
        else:
            loss = (self._epoch_class + self.config.beta * self._epoch_pred) / self._epoch_points
        return rmse, loss

    # -- metrics ------------------------------------------------------------

    def _emit(
        self,
        records: list[MetricsRecord],
        out: TextIO | None,
        test_seqs: list[StrokeSequence],
        train_metrics: tuple[float, float],
        started: float,
    ) -> None:
        if self.points_processed <= self.last_emit_points:
            return
        cfg = self.config
        test = evaluate_metrics(self.model, test_seqs, cfg.task_mode, cfg.beta, cfg.gamma)
        record = MetricsRecord(
            points=self.points_processed,
            epoch=self.epoch,
            train_rmse=train_metrics[0],
            test_rmse=test.rmse,
            train_loss=train_metrics[1],
            test_loss=test.loss_per_point,
            accuracy=test.accuracy,
            limit=self.state.limit,
            seconds=self.clock() - started,
        )
        records.append(record)
        if out is not None:
            out.write(record.to_csv_row() + "\n")
            out.flush()
        self.last_emit_points = self.points_processed

    # -- the loop -----------------------------------------------------------

    def run(
        self,
        train_seqs: list[StrokeSequence],
        test_seqs: list[StrokeSequence],
        metrics_out: TextIO | None = None,
        abort_checkpoint: str | Path | None = None,
    ) -> list[MetricsRecord]:
        """Train until the points budget is exhausted.

        Emits a metrics row at the start, every ``eval_every_batches``
        batches, at every curriculum advancement, and at the end. A
        non-finite loss saves a post-mortem checkpoint and raises
        TrainingAborted.
        """
        cfg = self.config
        started = self.clock()
        records: list[MetricsRecord] = []
        if metrics_out is not None and self.points_processed == 0:
            metrics_out.write(METRICS_HEADER + "\n")

        if not self.initial_eval_done:
            view = curr.effective_dataset(self.state, train_seqs)
            initial_train = evaluate_metrics(self.model, view, cfg.task_mode, cfg.beta, cfg.gamma)
            self.initial_eval_done = True
            self.last_emit_points = -1
            self._emit(records, metrics_out, test_seqs,
                       (initial_train.rmse, initial_train.loss_per_point), started)

        try:
            while self.points_processed < cfg.budget_points:
                view = curr.effective_dataset(self.state, train_seqs)
                batches = make_batches(view, cfg.batch_mode, cfg.batch_size, cfg.seed, self.epoch)
                lr = self.current_lr
                while self.batch_in_epoch < len(batches) and self.points_processed < cfg.budget_points:
                    self._train_batch(batches[self.batch_in_epoch], lr)
                    self.batch_in_epoch += 1
                    if self.batch_counter % cfg.eval_every_batches == 0:
                        self._emit(records, metrics_out, test_seqs, self._running_train_metrics(), started)
                if self.batch_in_epoch < len(batches):
                    break  # budget exhausted mid-epoch
                train_rmse, _ = self._running_train_metrics()
                before = self.state.limit
                curr.on_epoch_end(self.state, train_rmse, self.points_processed)
                if self.state.limit != before:
                    self._emit(records, metrics_out, test_seqs, self._running_train_metrics(), started)
                self.epoch += 1
                self.batch_in_epoch = 0
                self._epoch_sq = 0.0
                self._epoch_points = 0
                self._epoch_pred = 0.0
                self._epoch_class = 0.0
        except FloatingPointError as exc:
            path: Path | None = None
            if abort_checkpoint is not None:
                path = Path(abort_checkpoint)
                self.save_checkpoint(path)
            raise TrainingAborted(str(exc), path) from exc

        self._emit(records, metrics_out, test_seqs, self._running_train_metrics(), started)
        return records

    # -- persistence --------------------------------------------------------

    def save_checkpoint(self, path: str | Path) -> None:
        save_checkpoint(self, Path(path))


# ---------------------------------------------------------------------------
# Config and checkpoint serialization.
# ---------------------------------------------------------------------------

_MODEL_FIELDS = {
    "num_mixtures": int,
    "hidden_sizes": "int_tuple",
    "layer_kind": str,
    "input_size": int,
    "class_count": int,
    "scale": float,
}
_TRAIN_FIELDS = {
    "learning_rate": float,
    "decay": float,
    "reg_lambda": float,
    "batch_mode": str,
    "batch_size": int,
    "curriculum": str,
    "task_mode": str,
    "beta": int,
    "gamma": float,
    "seed": int,
    "budget_points": int,
    "clip_norm": float,
    "eval_every_batches": int,
}


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def config_to_pairs(config: TrainConfig) -> list[tuple[str, str]]:
    pairs = [(name, _format_value(getattr(config.model, name))) for name in _MODEL_FIELDS]
    pairs += [(name, _format_value(getattr(config, name))) for name in _TRAIN_FIELDS]
    return pairs


def _parse_typed(name: str, text: str, kind) -> object:
    if kind == "int_tuple":
        return tuple(int(p) for p in text.split(",") if p)
    return kind(text)


def config_from_pairs(pairs: dict[str, str], base: TrainConfig | None = None) -> TrainConfig:
    """Build a TrainConfig from key = value pairs, over optional defaults."""
    base = base or TrainConfig()
    model_kwargs = {}
    train_kwargs = {}
    for key, value in pairs.items():
        if key in _MODEL_FIELDS:
            model_kwargs[key] = _parse_typed(key, value, _MODEL_FIELDS[key])
        elif key in _TRAIN_FIELDS:
            train_kwargs[key] = _parse_typed(key, value, _TRAIN_FIELDS[key])
        else:
            raise ValueError(f"unknown config key {key!r}")
    model = replace(base.model, **model_kwargs) if model_kwargs else base.model
    return replace(base, model=model, **train_kwargs)


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines, ignoring blanks and # comments."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        pairs[key.strip()] = value.strip()
    return pairs


def _rng_state_to_hex(rng: np.random.Generator) -> str:
    return json.dumps(rng.bit_generator.state, sort_keys=True).encode("utf-8").hex()


def _rng_from_hex(hex_text: str) -> np.random.Generator:
    rng = np.random.default_rng(0)
    rng.bit_generator.state = json.loads(bytes.fromhex(hex_text).decode("utf-8"))
    return rng


def _write_array_block(lines: list[str], tag: str, name: str, arr: np.ndarray) -> None:
    lines.append(f"{tag} {name} {arr.shape[0]} {arr.shape[1]}")
    for row in arr:
        lines.append(" ".join(f"{v:.17g}" for v in row))


def save_checkpoint(trainer: Trainer, path: Path) -> None:
    """Write the full training state as the v1 text checkpoint format."""
    lines = [CHECKPOINT_HEADER]
    for key, value in config_to_pairs(trainer.config):
        lines.append(f"{key} = {value}")
    runtime = {
        "points_processed": trainer.points_processed,
        "batch_counter": trainer.batch_counter,
        "epoch": trainer.epoch,
        "batch_in_epoch": trainer.batch_in_epoch,
        "initial_eval_done": int(trainer.initial_eval_done),
        "last_emit_points": trainer.last_emit_points,
        "epoch_sq": f"{trainer._epoch_sq:.17g}",
        "epoch_points": trainer._epoch_points,
        "epoch_pred": f"{trainer._epoch_pred:.17g}",
        "epoch_class": f"{trainer._epoch_class:.17g}",
        "adam_t": trainer.adam.t,
        "curriculum_limit": "inf" if trainer.state.limit is None else trainer.state.limit,
        "curriculum_log": ";".join(f"{p}:{l}" for p, l in trainer.state.advancement_log),
    }
    if trainer.state.maximum is not None:
        runtime["curriculum_maximum"] = trainer.state.maximum
    for key, value in runtime.items():
        lines.append(f"{key} = {value}")
    for name, arr in trainer.model.params.items():
        _write_array_block(lines, "param", name, arr)
    for name, arr in trainer.adam.m.items():
        _write_array_block(lines, "adam_m", name, arr)
    for name, arr in trainer.adam.v.items():
        _write_array_block(lines, "adam_v", name, arr)
    lines.append(f"rng {_rng_state_to_hex(trainer.rng)}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path, clock: Callable[[], float] = time.perf_counter) -> Trainer:
    """Rebuild a Trainer from a checkpoint; resumed runs continue bit-exactly.

    The same training and test datasets must be supplied to ``run`` as in
    the original run.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0] != CHECKPOINT_HEADER:
        found = lines[0] if lines else "<empty file>"
        raise CheckpointError(f"{path}: expected header {CHECKPOINT_HEADER!r}, found {found!r}")

    pairs: dict[str, str] = {}
    arrays: dict[str, dict[str, np.ndarray]] = {"param": {}, "adam_m": {}, "adam_v": {}}
    rng_hex: str | None = None
    i = 1
    while i < len(lines):
        line = lines[i]
        if line.startswith(("param ", "adam_m ", "adam_v ")):
            tag, name, rows_s, cols_s = line.split()
            rows, cols = int(rows_s), int(cols_s)
            values = []
            for r in range(rows):
                if i + 1 + r >= len(lines):
                    raise CheckpointError(f"{path}: truncated {tag} block for {name!r}")
                row = lines[i + 1 + r].split()
                if len(row) != cols:
                    raise CheckpointError(
                        f"{path}: {tag} {name!r} row {r} has {len(row)} values, expected {cols}"
                    )
                values.append([float(v) for v in row])
            arrays[tag][name] = np.array(values, dtype=np.float64).reshape(rows, cols)
            i += 1 + rows
        elif line.startswith("rng "):
            rng_hex = line[4:].strip()
            i += 1
        elif "=" in line:
            key, _, value = line.partition("=")
            pairs[key.strip()] = value.strip()
            i += 1
        elif not line.strip():
            i += 1
        else:
            raise CheckpointError(f"{path}: unrecognized line {i + 1}: {line!r}")
    if rng_hex is None:
        raise CheckpointError(f"{path}: missing rng state (file truncated?)")

    config_keys = set(_MODEL_FIELDS) | set(_TRAIN_FIELDS)
    config = config_from_pairs({k: v for k, v in pairs.items() if k in config_keys})

    params_store = SequenceModel.initialize(config.model, 0).params
    expected = set(params_store.names())
    for tag in ("param", "adam_m", "adam_v"):
        got = set(arrays[tag])
        if got != expected:
            raise CheckpointError(
                f"{path}: {tag} blocks mismatch: missing {sorted(expected - got)}, extra {sorted(got - expected)}"
            )
    try:
        store = params_store.copy()
        for name in expected:
            store[name] = arrays["param"][name]
        model = SequenceModel(config.model, store)
    except ShapeError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc

    trainer = Trainer(config, model=model, clock=clock)
    for name in expected:
        trainer.adam.m[name] = arrays["adam_m"][name]
        trainer.adam.v[name] = arrays["adam_v"][name]
    trainer.adam.t = int(pairs["adam_t"])
    trainer.points_processed = int(pairs["points_processed"])
    trainer.batch_counter = int(pairs["batch_counter"])
    trainer.epoch = int(pairs["epoch"])
    trainer.batch_in_epoch = int(pairs["batch_in_epoch"])
    trainer.initial_eval_done = bool(int(pairs["initial_eval_done"]))
    trainer.last_emit_points = int(pairs["last_emit_points"])
    trainer._epoch_sq = float(pairs["epoch_sq"])
    trainer._epoch_points = int(pairs["epoch_points"])
    trainer._epoch_pred = float(pairs["epoch_pred"])
    trainer._epoch_class = float(pairs["epoch_class"])
    limit_text = pairs["curriculum_limit"]
    trainer.state.limit = None if limit_text == "inf" else int(limit_text)
    if "curriculum_maximum" in pairs:
        trainer.state.maximum = int(pairs["curriculum_maximum"])
    log_text = pairs.get("curriculum_log", "")
    trainer.state.advancement_log = [
        (int(p), int(l)) for p, l in (entry.split(":") for entry in log_text.split(";") if entry)
    ]
    trainer.rng = _rng_from_hex(rng_hex)
    return trainer


# ---------------------------------------------------------------------------
# Transfer learning variants.
# ---------------------------------------------------------------------------

TRANSFER_VARIANTS = ("transfer_both", "transfer_class_only", "scratch_both", "scratch_class_only")


def transfer_run(
    variant: str,
    config: TrainConfig,
    train_seqs: list[StrokeSequence],
    test_seqs: list[StrokeSequence],
    source_checkpoint: str | Path | None = None,
    metrics_out: TextIO | None = None,
    clock: Callable[[], float] = time.perf_counter,
) -> tuple[list[MetricsRecord], Trainer]:
    """Run one of the four classification variants.

    Transfer variants initialize from a trained sequence-prediction
    checkpoint (weights only; the optimizer starts fresh for the new
    task); scratch variants initialize from the seed. ``_both`` variants
    keep the prediction loss in play (beta=1), ``_class_only`` drop it.
    """
    if variant not in TRANSFER_VARIANTS:
        raise ValueError(f"variant must be one of {TRANSFER_VARIANTS}, got {variant!r}")
    beta = 1 if variant.endswith("both") else 0
    config = replace(config, task_mode="classification", beta=beta)
    model = None
    if variant.startswith("transfer"):
        if source_checkpoint is None:
            raise ValueError("transfer variants need a source checkpoint")
        source = load_checkpoint(source_checkpoint, clock=clock)
        if source.config.model != config.model:
            raise CheckpointError("source checkpoint model shape differs from requested config")
        model = source.model
    trainer = Trainer(config, model=model, clock=clock)
    records = trainer.run(train_seqs, test_seqs, metrics_out=metrics_out)
    return records, trainer


# ---------------------------------------------------------------------------
# Full-model gradient verification.
# ---------------------------------------------------------------------------

def model_gradient_check(
    model: SequenceModel,
    batch: Batch,
    task_mode: str = "prediction",
    beta: int = 1,
    gamma: float = 10.0,
    reg_lambda: float = 0.0,
    num_coords: int = 200,
    eps: float = 1e-5,
    seed: int = 0,
) -> float:
    """Compare analytic end-to-end gradients with central differences.

    The checked objective is exactly the training one: batch loss divided
    by the number of points, plus the max-weight regularizer when active.
    """
    from . import net

    reg_active = reg_lambda != 0.0 and (task_mode == "prediction" or beta == 1)

    def objective() -> float:
        raw, _ = model.forward_raw(batch.inputs)
        terms = batch_loss_terms(
            raw, batch.targets, batch.mask, batch.labels, model.config.num_mixtures,
            mode=task_mode, beta=beta, gamma=gamma,
        )
        if task_mode == "prediction":
            total = terms.prediction_sum
        else:
            total = terms.classification_sum + beta * terms.prediction_sum
        total /= terms.num_points
        if reg_active:
            total += reg_lambda * max_abs_weight(model.params)[0]
        return total

    raw, cache = model.forward_raw(batch.inputs)
    terms = batch_loss_terms(
        raw, batch.targets, batch.mask, batch.labels, model.config.num_mixtures,
        mode=task_mode, beta=beta, gamma=gamma,
    )
    grads = model.backward_from_raw(cache, terms.d_raw / terms.num_points)
    if reg_active:
        _, name, idx = max_abs_weight(model.params)
        if name is not None:
            sign = 1.0 if model.params[name].flat[idx] >= 0 else -1.0
            grads[name].flat[idx] += reg_lambda * sign
    rng = np.random.default_rng(derive_seed(seed, "gradcheck-coords"))
    return net.gradient_check(objective, grads, model.params, rng, num_coords=num_coords, eps=eps)

"""Sequence model: stacked recurrent (or feedforward) layers feeding a
mixture-density head plus end-of-stroke/end-of-digit and class outputs.

The head emits, per step, mixture weights, bivariate Gaussian means,
standard deviations and correlations, two termination probabilities and a
10-way class distribution: 6*M + 2 + 10 raw values. Losses are computed in
log space with a max shift; near-zero probabilities are floored at 1e-10
inside logs and the floor events counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import net
from .net import GradStore, LayerSpec, ParamStore
from .strokes import PenStep

PROB_FLOOR = 1e-10
INIT_WEIGHT_RANGE = 0.08
FORGET_GATE_BIAS = 1.0

# Saturation guards so the squashed parameters keep their invariants
# (sigma > 0, |rho| < 1, probabilities inside (0, 1)) for any finite raw
# output. Outside the guarded range the loss is flat, so the matching
# gradients are zero there.
LOG_SIGMA_CLAMP = 300.0
RHO_MAX = 1.0 - 1e-15
PROB_EPS = 1e-15


@dataclass(frozen=True)
class ModelConfig:
    num_mixtures: int = 17
    hidden_sizes: tuple[int, ...] = (200, 200)
    layer_kind: str = "recurrent"  # or "feedforward"
    input_size: int = 4
    class_count: int = 10
    scale: float = 10.0

    def __post_init__(self) -> None:
        if self.num_mixtures < 1:
            raise ValueError("num_mixtures must be >= 1")
        if self.layer_kind not in ("recurrent", "feedforward"):
            raise ValueError(f"layer_kind must be 'recurrent' or 'feedforward', got {self.layer_kind!r}")
        if self.input_size != 4 or self.class_count != 10:
            raise ValueError("model expects 4 inputs and 10 classes")
        if not self.hidden_sizes:
            raise ValueError("at least one hidden layer is required")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def output_size(self) -> int:
        return 6 * self.num_mixtures + 2 + self.class_count


@dataclass
class MdnOutput:
    """Mixture parameters and probabilities for one timestep."""

    pi: np.ndarray
    mu_x: np.ndarray
    mu_y: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    rho: np.ndarray
    eos_p: float
    eod_p: float
    class_p: np.ndarray

    def validate(self) -> None:
        if abs(self.pi.sum() - 1.0) > 1e-9:
            raise ValueError(f"mixture weights sum to {self.pi.sum()!r}, not 1")
        if not (self.sigma_x > 0).all() or not (self.sigma_y > 0).all():
            raise ValueError("standard deviations must be positive")
        if not (np.abs(self.rho) < 1).all():
            raise ValueError("correlations must lie in (-1, 1)")
        if not 0 < self.eos_p < 1 or not 0 < self.eod_p < 1:
            raise ValueError("eos/eod probabilities must lie in (0, 1)")
        if abs(self.class_p.sum() - 1.0) > 1e-9 or (self.class_p < 0).any():
            raise ValueError("class distribution must lie on the simplex")


@dataclass(frozen=True)
class StepTarget:
    """Next-step target in scaled units plus termination flags."""

    dx: float
    dy: float
    eos: int
    eod: int
    label: int | None = None


# Raw output vector layout, as index slices.

def _slices(m: int) -> dict[str, slice]:
    return {
        "pi": slice(0, m),
        "mu_x": slice(m, 2 * m),
        "mu_y": slice(2 * m, 3 * m),
        "log_sigma_x": slice(3 * m, 4 * m),
        "log_sigma_y": slice(4 * m, 5 * m),
        "rho": slice(5 * m, 6 * m),
        "eos": slice(6 * m, 6 * m + 1),
        "eod": slice(6 * m + 1, 6 * m + 2),
        "cls": slice(6 * m + 2, 6 * m + 12),
    }


def mdn_transform(raw: np.ndarray, num_mixtures: int) -> MdnOutput:
    """Squash one raw head vector into mixture parameters.

    Weights and class outputs via softmax, deviations via exp, correlations
    via tanh, termination probabilities via sigmoid; means pass through.
    """
    raw = np.asarray(raw, dtype=np.float64)
    expected = 6 * num_mixtures + 12
    if raw.shape != (expected,):
        raise net.ShapeError(f"raw output must have length {expected}, got shape {raw.shape}")
    s = _slices(num_mixtures)
    return MdnOutput(
        pi=net.softmax(raw[s["pi"]]),
        mu_x=raw[s["mu_x"]].copy(),
        mu_y=raw[s["mu_y"]].copy(),
        sigma_x=np.exp(np.clip(raw[s["log_sigma_x"]], -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)),
        sigma_y=np.exp(np.clip(raw[s["log_sigma_y"]], -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)),
        rho=np.clip(np.tanh(raw[s["rho"]]), -RHO_MAX, RHO_MAX),
        eos_p=float(np.clip(net.sigmoid(raw[s["eos"]]), PROB_EPS, 1.0 - PROB_EPS)[0]),
        eod_p=float(np.clip(net.sigmoid(raw[s["eod"]]), PROB_EPS, 1.0 - PROB_EPS)[0]),
        class_p=net.softmax(raw[s["cls"]]),
    )


def bivariate_density(
    dx: float, dy: float, mu_x: float, mu_y: float, sigma_x: float, sigma_y: float, rho: float
) -> float:
    """Density of a correlated bivariate Gaussian at (dx, dy)."""
    if sigma_x <= 0 or sigma_y <= 0:
        raise ValueError(f"standard deviations must be positive, got {sigma_x}, {sigma_y}")
    if not -1 < rho < 1:
        raise ValueError(f"correlation must lie in (-1, 1), got {rho}")
    zx = (dx - mu_x) / sigma_x
    zy = (dy - mu_y) / sigma_y
    z = zx * zx + zy * zy - 2.0 * rho * zx * zy
    one_minus_r2 = 1.0 - rho * rho
    norm = 2.0 * math.pi * sigma_x * sigma_y * math.sqrt(one_minus_r2)
    return math.exp(-z / (2.0 * one_minus_r2)) / norm


@dataclass
class LossBreakdown:
    """Loss value plus how often the probability floor was hit."""

    total: float
    floored: int


def _step_mixture_log(out: MdnOutput, dx: float, dy: float) -> float:
    with np.errstate(divide="ignore"):
        log_pi = np.log(out.pi)
    zx = (dx - out.mu_x) / out.sigma_x
    zy = (dy - out.mu_y) / out.sigma_y
    one_minus_r2 = 1.0 - out.rho * out.rho
    z = zx * zx + zy * zy - 2.0 * out.rho * zx * zy
    log_density = (
        -math.log(2.0 * math.pi)
        - np.log(out.sigma_x)
        - np.log(out.sigma_y)
        - 0.5 * np.log(one_minus_r2)
        - z / (2.0 * one_minus_r2)
    )
    return float(net.logsumexp(log_pi + log_density))


def _bernoulli_term(p: float, target: int) -> tuple[float, bool]:
    used = p if target == 1 else 1.0 - p
    clipped = min(max(used, PROB_FLOOR), 1.0 - PROB_FLOOR)
    return -math.log(clipped), used < PROB_FLOOR


def max_abs_weight(weights: ParamStore) -> tuple[float, str | None, int]:
    """Largest-magnitude weight, ties resolved by name then flat index.

    Bias parameters (names ending ``.b``) are not regularized.
    """
    best = 0.0
    best_name: str | None = None
    best_index = 0
    for name, arr in weights.items():
        if name.endswith(".b") or arr.size == 0:
            continue
        flat = np.abs(arr).ravel()
        idx = int(np.argmax(flat))
        if flat[idx] > best:
            best = float(flat[idx])
            best_name = name
            best_index = idx
    return best, best_name, best_index


def prediction_loss_detail(
    outputs: list[MdnOutput],
    targets: list[StepTarget],
    weights: ParamStore | None = None,
    reg_lambda: float = 0.0,
) -> LossBreakdown:
    """Sequence prediction loss over aligned per-step outputs and targets.

    Sums, per step, the negative log mixture density of the target offset
    and the log probabilities of the termination flags, then adds
    ``reg_lambda`` times the largest weight magnitude. No per-point
    normalization is applied here.
    """
    if len(outputs) != len(targets) or not outputs:
        raise ValueError(f"need equal nonzero counts, got {len(outputs)} outputs, {len(targets)} targets")
    total = 0.0
    floored = 0
    for out, tgt in zip(outputs, targets):
        lse = _step_mixture_log(out, tgt.dx, tgt.dy)
        floor_log = math.log(PROB_FLOOR)
        if lse < floor_log:
            floored += 1
            lse = floor_log
        total -= lse
        for p, flag in ((out.eos_p, tgt.eos), (out.eod_p, tgt.eod)):
            term, hit = _bernoulli_term(p, flag)
            total += term
            floored += hit
    if reg_lambda != 0.0:
        if weights is None:
            raise ValueError("reg_lambda requires a weight store")
        total += reg_lambda * max_abs_weight(weights)[0]
    return LossBreakdown(total=total, floored=floored)


def prediction_loss(
    outputs: list[MdnOutput],
    targets: list[StepTarget],
    weights: ParamStore | None = None,
    reg_lambda: float = 0.0,
) -> float:
    return prediction_loss_detail(outputs, targets, weights, reg_lambda).total


def classification_loss(class_p_steps: list[np.ndarray], label: int, gamma: float = 10.0) -> float:
    """Class cross-entropy, averaged over steps and weighted by gamma.

    Every evaluated step contributes the full 10-term Bernoulli-style
    cross entropy of the softmax outputs against the one-hot label.
    """
    if not 0 <= label <= 9:
        raise ValueError(f"label must be 0-9, got {label}")
    if not class_p_steps:
        raise ValueError("need at least one evaluated step")
    total = 0.0
    for class_p in class_p_steps:
        p = np.clip(class_p, PROB_FLOOR, 1.0 - PROB_FLOOR)
        y = np.zeros(10)
        y[label] = 1.0
        total += -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).sum() / 10.0
    return gamma * total / len(class_p_steps)


def total_loss(mode: str, beta: int, prediction: float, classification: float) -> float:
    """Combine the two losses per task mode."""
    if mode == "prediction":
        return prediction
    if mode == "classification":
        if beta not in (0, 1):
            raise ValueError(f"beta must be 0 or 1, got {beta}")
        return classification + beta * prediction
    raise ValueError(f"mode must be 'prediction' or 'classification', got {mode!r}")


def point_estimate(out: MdnOutput, scale: float = 1.0) -> tuple[float, float]:
    """Mixture mean of the offset prediction, rescaled to pixel units."""
    return (
        float((out.pi * out.mu_x).sum() * scale),
        float((out.pi * out.mu_y).sum() * scale),
    )


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def sample_step(
    out: MdnOutput, rng: np.random.Generator, scale: float = 1.0, temperature: float = 1.0
) -> PenStep:
    """Draw one pen step from the mixture, in integer pixel units.

    Temperature reweights mixture probabilities by pi**(1/T) and widens
    deviations by sqrt(T); 1.0 reproduces the model distribution. A drawn
    end-of-digit forces end-of-stroke, and any end-of-stroke zeroes the
    offsets so the step satisfies the stroke-format contract.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    pi = out.pi
    if temperature != 1.0:
        pi = pi ** (1.0 / temperature)
        pi = pi / pi.sum()
    j = int(rng.choice(len(pi), p=pi))
    sx = out.sigma_x[j] * math.sqrt(temperature)
    sy = out.sigma_y[j] * math.sqrt(temperature)
    rho = float(out.rho[j])
    z1 = float(rng.standard_normal())
    z2 = float(rng.standard_normal())
    dx = float(out.mu_x[j]) + sx * z1
    dy = float(out.mu_y[j]) + sy * (rho * z1 + math.sqrt(1.0 - rho * rho) * z2)
    eos = 1 if rng.random() < out.eos_p else 0
    eod = 1 if rng.random() < out.eod_p else 0
    if eod:
        eos = 1
    if eos:
        return PenStep(0, 0, eos, eod)
    return PenStep(_round_half_away(dx * scale), _round_half_away(dy * scale), 0, 0)


# ---------------------------------------------------------------------------
# Batched loss kernel with analytic gradients (training path).
# ---------------------------------------------------------------------------

@dataclass
class BatchLossTerms:
    """Per-point loss sums and the gradient w.r.t. the raw head outputs."""

    prediction_sum: float
    classification_sum: float
    d_raw: np.ndarray  # gradient of the selected objective, same shape as raw
    floored: int
    num_points: int


def batch_loss_terms(
    raw: np.ndarray,
    targets: np.ndarray,
    mask: np.ndarray,
    labels: np.ndarray | None,
    num_mixtures: int,
    mode: str = "prediction",
    beta: int = 1,
    gamma: float = 10.0,
) -> BatchLossTerms:
    """Loss sums and d(loss)/d(raw) over a (batch, time) block.

    ``targets`` holds scaled (dx, dy, eos, eod) per step; ``mask`` selects
    valid points. In prediction mode the class head receives zero gradient;
    in classification mode the prediction terms are scaled by ``beta``.
    """
    m = num_mixtures
    s = _slices(m)
    valid = mask.astype(bool)
    r = raw[valid]  # (P, O)
    t = targets[valid]
    n = r.shape[0]
    if n == 0:
        raise ValueError("batch contains no valid points")

    pl = r[:, s["pi"]]
    mu_x = r[:, s["mu_x"]]
    mu_y = r[:, s["mu_y"]]
    lsx = np.clip(r[:, s["log_sigma_x"]], -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)
    lsy = np.clip(r[:, s["log_sigma_y"]], -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)
    live_lsx = np.abs(r[:, s["log_sigma_x"]]) <= LOG_SIGMA_CLAMP
    live_lsy = np.abs(r[:, s["log_sigma_y"]]) <= LOG_SIGMA_CLAMP
    tanh_rho = np.tanh(r[:, s["rho"]])
    rho = np.clip(tanh_rho, -RHO_MAX, RHO_MAX)
    live_rho = np.abs(tanh_rho) <= RHO_MAX

    log_pi = net.log_softmax(pl)
    zx = (t[:, 0:1] - mu_x) / np.exp(lsx)
    zy = (t[:, 1:2] - mu_y) / np.exp(lsy)
    one_minus_r2 = 1.0 - rho * rho
    z = zx * zx + zy * zy - 2.0 * rho * zx * zy
    log_density = (
        -math.log(2.0 * math.pi) - lsx - lsy - 0.5 * np.log(one_minus_r2) - z / (2.0 * one_minus_r2)
    )
    joint = log_pi + log_density
    lse = net.logsumexp(joint, axis=-1)  # (P,)
    floor_log = math.log(PROB_FLOOR)
    mix_floored = lse < floor_log
    mixture_terms = -np.maximum(lse, floor_log)

    # Responsibilities drive all mixture gradients; floored points go dead.
    resp = np.exp(joint - lse[:, None])
    resp[mix_floored] = 0.0
    pi = net.softmax(pl)
    live = (~mix_floored)[:, None].astype(np.float64)
    d_pl = (pi - resp) * live
    d_mu_x = -resp * (zx - rho * zy) / (np.exp(lsx) * one_minus_r2)
    d_mu_y = -resp * (zy - rho * zx) / (np.exp(lsy) * one_minus_r2)
    d_lsx = resp * (1.0 - zx * (zx - rho * zy) / one_minus_r2) * live_lsx
    d_lsy = resp * (1.0 - zy * (zy - rho * zx) / one_minus_r2) * live_lsy
    d_rho_raw = -resp * (rho + zx * zy - rho * z / one_minus_r2) * live_rho

    eos_logit = r[:, s["eos"]][:, 0]
    eod_logit = r[:, s["eod"]][:, 0]
    bern_terms = np.zeros(n)
    d_bern = np.zeros((n, 2))
    floored = int(mix_floored.sum())
    for col, (logit, flag) in enumerate(((eos_logit, t[:, 2]), (eod_logit, t[:, 3]))):
        p = net.sigmoid(logit)
        used = np.where(flag == 1.0, p, 1.0 - p)
        clipped = np.clip(used, PROB_FLOOR, 1.0 - PROB_FLOOR)
        bern_terms += -np.log(clipped)
        in_range = (used >= PROB_FLOOR) & (used <= 1.0 - PROB_FLOOR)
        d_bern[:, col] = (p - flag) * in_range
        floored += int((used < PROB_FLOOR).sum())

    pred_terms = mixture_terms + bern_terms
    pred_weight = 1.0 if mode == "prediction" else float(beta)

    d_r = np.zeros_like(r)
    d_r[:, s["pi"]] = d_pl * pred_weight
    d_r[:, s["mu_x"]] = d_mu_x * pred_weight
    d_r[:, s["mu_y"]] = d_mu_y * pred_weight
    d_r[:, s["log_sigma_x"]] = d_lsx * pred_weight
    d_r[:, s["log_sigma_y"]] = d_lsy * pred_weight
    d_r[:, s["rho"]] = d_rho_raw * pred_weight
    d_r[:, s["eos"]] = d_bern[:, 0:1] * pred_weight
    d_r[:, s["eod"]] = d_bern[:, 1:2] * pred_weight

    class_sum = 0.0
    if mode == "classification":
        if labels is None:
            raise ValueError("classification mode requires labels")
        step_labels = np.broadcast_to(labels[:, None], mask.shape)[valid]
        cls_logits = r[:, s["cls"]]
        p = net.softmax(cls_logits)
        pc = np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)
        y = np.zeros((n, 10))
        y[np.arange(n), step_labels] = 1.0
        class_terms = gamma * (-(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)).sum(axis=1) / 10.0)
        class_sum = float(class_terms.sum())
        a = (y / pc - (1.0 - y) / (1.0 - pc)) * ((p >= PROB_FLOOR) & (p <= 1.0 - PROB_FLOOR))
        d_cls = (-gamma / 10.0) * p * (a - (a * p).sum(axis=1, keepdims=True))
        d_r[:, s["cls"]] = d_cls

    d_raw = np.zeros_like(raw)
    d_raw[valid] = d_r
    return BatchLossTerms(
        prediction_sum=float(pred_terms.sum()),
        classification_sum=class_sum,
        d_raw=d_raw,
        floored=floored,
        num_points=n,
    )


def per_point_prediction_terms(
    raw: np.ndarray, targets: np.ndarray, mask: np.ndarray, num_mixtures: int
) -> np.ndarray:
    """Per-step prediction loss contributions (mixture + termination terms).

    Returns an array shaped like ``mask`` with zeros at masked positions;
    used by the position profiler and evaluation.
    """
    out = np.zeros(mask.shape)
    out[mask.astype(bool)] = _flat_prediction_terms(raw, targets, mask, num_mixtures)
    return out


def _flat_prediction_terms(
    raw: np.ndarray, targets: np.ndarray, mask: np.ndarray, num_mixtures: int
) -> np.ndarray:
    m = num_mixtures
    s = _slices(m)
    valid = mask.astype(bool)
    r = raw[valid]
    t = targets[valid]
    lsx = np.clip(r[:, s["log_sigma_x"]], -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)
    lsy = np.clip(r[:, s["log_sigma_y"]], -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)
    rho = np.clip(np.tanh(r[:, s["rho"]]), -RHO_MAX, RHO_MAX)
    log_pi = net.log_softmax(r[:, s["pi"]])
    zx = (t[:, 0:1] - r[:, s["mu_x"]]) / np.exp(lsx)
    zy = (t[:, 1:2] - r[:, s["mu_y"]]) / np.exp(lsy)
    one_minus_r2 = 1.0 - rho * rho
    z = zx * zx + zy * zy - 2.0 * rho * zx * zy
    log_density = (
        -math.log(2.0 * math.pi) - lsx - lsy - 0.5 * np.log(one_minus_r2) - z / (2.0 * one_minus_r2)
    )
    lse = net.logsumexp(log_pi + log_density, axis=-1)
    terms = -np.maximum(lse, math.log(PROB_FLOOR))
    for logit, flag in ((r[:, s["eos"]][:, 0], t[:, 2]), (r[:, s["eod"]][:, 0], t[:, 3])):
        p = net.sigmoid(logit)
        used = np.where(flag == 1.0, p, 1.0 - p)
        terms += -np.log(np.clip(used, PROB_FLOOR, 1.0 - PROB_FLOOR))
    return terms


# ---------------------------------------------------------------------------
# The model proper.
# ---------------------------------------------------------------------------

class SequenceModel:
    """Parameter store plus the layer stack described by a ModelConfig."""

    def __init__(self, config: ModelConfig, params: ParamStore) -> None:
        self.config = config
        self.params = params
        self.specs = build_layer_specs(config)
        self._check_shapes()

    def _check_shapes(self) -> None:
        expected = param_shapes(self.config)
        for name, shape in expected.items():
            if name not in self.params:
                raise net.ShapeError(f"missing parameter {name!r}")
            if self.params[name].shape != shape:
                raise net.ShapeError(
                    f"parameter {name!r} has shape {self.params[name].shape}, expected {shape}"
                )
        extra = set(self.params.names()) - set(expected)
        if extra:
            raise net.ShapeError(f"unexpected parameters: {sorted(extra)}")

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int) -> "SequenceModel":
        """Seeded uniform weight init; biases zero except the forget gates."""
        rng = np.random.default_rng(seed)
        params = ParamStore()
        for name, shape in sorted(param_shapes(config).items()):
            if name.endswith(".b"):
                arr = np.zeros(shape)
            else:
                arr = rng.uniform(-INIT_WEIGHT_RANGE, INIT_WEIGHT_RANGE, size=shape)
            params.add(name, arr)
        if config.layer_kind == "recurrent":
            for li, hidden in enumerate(config.hidden_sizes):
                b = params[f"layer{li}.b"]
                b[0, hidden:2 * hidden] = FORGET_GATE_BIAS
        return cls(config, params)

    def forward_raw(self, inputs: np.ndarray) -> tuple[np.ndarray, tuple]:
        """Raw head outputs for a (batch, time, 4) block of scaled inputs."""
        hidden, caches = net.unroll_forward(self.params, self.specs, inputs)
        batch, steps, width = hidden.shape
        flat = hidden.reshape(batch * steps, width)
        raw = (flat @ self.params["out.w"] + self.params["out.b"]).reshape(
            batch, steps, self.config.output_size
        )
        return raw, (caches, hidden)

    def backward_from_raw(self, cache: tuple, d_raw: np.ndarray) -> GradStore:
        """Accumulate gradients of a scalar through the head and the stack."""
        caches, hidden = cache
        batch, steps, width = hidden.shape
        grads = self.params.new_grads()
        d_flat = d_raw.reshape(batch * steps, -1)
        flat_hidden = hidden.reshape(batch * steps, width)
        grads.accumulate("out.w", flat_hidden.T @ d_flat)
        grads.accumulate("out.b", d_flat.sum(axis=0, keepdims=True))
        d_hidden = (d_flat @ self.params["out.w"].T).reshape(batch, steps, width)
        net.unroll_backward(self.params, self.specs, caches, d_hidden, grads)
        return grads

    def steps_to_inputs(self, steps: list[PenStep]) -> np.ndarray:
        """Scale a step list into a (1, T, 4) network input block."""
        arr = np.array(
            [(s.dx / self.config.scale, s.dy / self.config.scale, s.eos, s.eod) for s in steps],
            dtype=np.float64,
        )
        return arr[None, :, :]

    def sequence_outputs(self, steps: list[PenStep]) -> list[MdnOutput]:
        """Teacher-forced per-step outputs for one full step sequence."""
        raw, _ = self.forward_raw(self.steps_to_inputs(steps))
        return [mdn_transform(raw[0, t], self.config.num_mixtures) for t in range(raw.shape[1])]

    def copy(self) -> "SequenceModel":
        return SequenceModel(self.config, self.params.copy())


def build_layer_specs(config: ModelConfig) -> list[LayerSpec]:
    kind = "lstm" if config.layer_kind == "recurrent" else "ff"
    specs = []
    previous = config.input_size
    for hidden in config.hidden_sizes:
        specs.append(LayerSpec(kind=kind, input_size=previous, hidden_size=hidden))
        previous = hidden
    return specs


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, int]]:
    shapes: dict[str, tuple[int, int]] = {}
    for li, spec in enumerate(build_layer_specs(config)):
        shapes.update(net.layer_param_shapes(spec, f"layer{li}"))
    shapes["out.w"] = (config.hidden_sizes[-1], config.output_size)
    shapes["out.b"] = (1, config.output_size)
    return shapes

"""Dense numerical core: parameter store, forward/backward primitives,
recurrent and feedforward cells, unrolling through time, gradient checking.

Everything is float64 numpy. Forward passes cache whatever the paired
backward pass needs; backward passes return exact reverse-mode gradients,
verified against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are incompatible; the message names the operands."""


class NonFiniteError(FloatingPointError):
    """A value that must be finite is NaN or infinite."""


def ensure_finite(name: str, arr: np.ndarray) -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} contains NaN or Inf")


class ParamStore:
    """Named float64 matrices with deterministic (lexicographic) iteration.

    Shapes are fixed at creation; houses the weight vector examined by the
    max-magnitude regularizer.
    """

    def __init__(self) -> None:
        self._arrays: dict[str, np.ndarray] = {}

    def add(self, name: str, array: np.ndarray) -> None:
        if name in self._arrays:
            raise ValueError(f"parameter {name!r} already exists")
        arr = np.asarray(array, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"parameter {name!r} must be 2-D, got shape {arr.shape}")
        self._arrays[name] = arr

    def names(self) -> list[str]:
        return sorted(self._arrays)

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for name in self.names():
            yield name, self._arrays[name]

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        if name not in self._arrays:
            raise KeyError(f"unknown parameter {name!r}")
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self._arrays[name].shape:
            raise ShapeError(
                f"parameter {name!r} has shape {self._arrays[name].shape}, cannot assign {value.shape}"
            )
        self._arrays[name] = value

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def __len__(self) -> int:
        return len(self._arrays)

    def total_size(self) -> int:
        return sum(a.size for _, a in self.items())

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for name, arr in self.items():
            out.add(name, arr.copy())
        return out

    def new_grads(self) -> "GradStore":
        grads = GradStore()
        for name, arr in self.items():
            grads.add(name, np.zeros_like(arr))
        return grads


class GradStore(ParamStore):
    """Gradient arrays shape-aligned with a ParamStore."""

    def accumulate(self, name: str, delta: np.ndarray) -> None:
        self._arrays[name] += delta

    def scale(self, factor: float) -> None:
        for name in self._arrays:
            self._arrays[name] *= factor

    def global_norm(self) -> float:
        total = 0.0
        for _, arr in self.items():
            total += float((arr * arr).sum())
        return float(np.sqrt(total))

    def clip_global_norm(self, max_norm: float) -> float:
        """Scale all gradients so the global norm is at most max_norm."""
        norm = self.global_norm()
        if norm > max_norm:
            self.scale(max_norm / norm)
        return norm


# ---------------------------------------------------------------------------
# Primitives: forward value plus backward rule.
# ---------------------------------------------------------------------------

def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    return a @ b


def matmul_backward(d_out: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return d_out @ b.T, a.T @ d_out


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ShapeError(f"add: shapes differ, {a.shape} vs {b.shape}")
    return a + b


def add_backward(d_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return d_out, d_out


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ShapeError(f"multiply: shapes differ, {a.shape} vs {b.shape}")
    return a * b


def multiply_backward(d_out: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return d_out * b, d_out * a


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(d_out: np.ndarray, value: np.ndarray) -> np.ndarray:
    return d_out * value * (1.0 - value)


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def tanh_backward(d_out: np.ndarray, value: np.ndarray) -> np.ndarray:
    return d_out * (1.0 - value * value)


def exp(x: np.ndarray) -> np.ndarray:
    return np.exp(x)


def exp_backward(d_out: np.ndarray, value: np.ndarray) -> np.ndarray:
    return d_out * value


def softmax(x: np.ndarray) -> np.ndarray:
    """Softmax over the last axis, max-shifted for stability."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(d_out: np.ndarray, value: np.ndarray) -> np.ndarray:
    dot = (d_out * value).sum(axis=-1, keepdims=True)
    return value * (d_out - dot)


def log_softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def logsumexp(x: np.ndarray, axis: int = -1) -> np.ndarray:
    m = x.max(axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.exp(x - m).sum(axis=axis))


# ---------------------------------------------------------------------------
# Cells and unrolling.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LayerSpec:
    kind: str  # "lstm" or "ff"
    input_size: int
    hidden_size: int

    def __post_init__(self) -> None:
        if self.kind not in ("lstm", "ff"):
            raise ValueError(f"layer kind must be 'lstm' or 'ff', got {self.kind!r}")


def layer_param_shapes(spec: LayerSpec, prefix: str) -> dict[str, tuple[int, int]]:
    if spec.kind == "lstm":
        return {
            f"{prefix}.wx": (spec.input_size, 4 * spec.hidden_size),
            f"{prefix}.wh": (spec.hidden_size, 4 * spec.hidden_size),
            f"{prefix}.b": (1, 4 * spec.hidden_size),
        }
    return {
        f"{prefix}.wx": (spec.input_size, spec.hidden_size),
        f"{prefix}.b": (1, spec.hidden_size),
    }


def lstm_cell_forward(
    x: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    wx: np.ndarray,
    wh: np.ndarray,
    b: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Gated cell update; gate order in the stacked weights is i, f, o, g."""
    hidden = wh.shape[0]
    z = matmul(x, wx) + matmul(h_prev, wh) + b
    i = sigmoid(z[:, :hidden])
    f = sigmoid(z[:, hidden:2 * hidden])
    o = sigmoid(z[:, 2 * hidden:3 * hidden])
    g = tanh(z[:, 3 * hidden:])
    c = f * c_prev + i * g
    tc = tanh(c)
    h = o * tc
    cache = (x, h_prev, c_prev, i, f, o, g, tc)
    return h, c, cache


def lstm_cell_backward(
    cache: tuple,
    wx: np.ndarray,
    wh: np.ndarray,
    d_h: np.ndarray,
    d_c: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Reverse of lstm_cell_forward.

    Returns (d_x, d_h_prev, d_c_prev, d_wx, d_wh, d_b). ``d_c`` is the
    gradient flowing into the cell state from the next timestep.
    """
    x, h_prev, c_prev, i, f, o, g, tc = cache
    d_o = d_h * tc
    d_c_total = d_c + tanh_backward(d_h * o, tc)
    d_f = d_c_total * c_prev
    d_c_prev = d_c_total * f
    d_i = d_c_total * g
    d_g = d_c_total * i
    d_z = np.concatenate(
        [
            sigmoid_backward(d_i, i),
            sigmoid_backward(d_f, f),
            sigmoid_backward(d_o, o),
            tanh_backward(d_g, g),
        ],
        axis=1,
    )
    d_x = d_z @ wx.T
    d_h_prev = d_z @ wh.T
    d_wx = x.T @ d_z
    d_wh = h_prev.T @ d_z
    d_b = d_z.sum(axis=0, keepdims=True)
    return d_x, d_h_prev, d_c_prev, d_wx, d_wh, d_b


def ff_cell_forward(x: np.ndarray, wx: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, tuple]:
    h = tanh(matmul(x, wx) + b)
    return h, (x, h)


def ff_cell_backward(
    cache: tuple, wx: np.ndarray, d_h: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, h = cache
    d_z = tanh_backward(d_h, h)
    return d_z @ wx.T, x.T @ d_z, d_z.sum(axis=0, keepdims=True)


def unroll_forward(
    params: ParamStore, specs: list[LayerSpec], inputs: np.ndarray
) -> tuple[np.ndarray, list]:
    """Run a layer stack over a (batch, time, features) input block.

    Hidden and cell states start at zero for every sequence. Returns the
    top layer's per-step activations (batch, time, hidden) and the caches
    needed by unroll_backward.
    """
    if inputs.ndim != 3:
        raise ShapeError(f"inputs must be (batch, time, features), got {inputs.shape}")
    if inputs.shape[1] == 0:
        raise ShapeError("inputs must contain at least one timestep")
    batch, steps, _ = inputs.shape
    layer_in = inputs
    all_caches: list = []
    for li, spec in enumerate(specs):
        prefix = f"layer{li}"
        if spec.kind == "lstm":
            wx, wh, b = params[f"{prefix}.wx"], params[f"{prefix}.wh"], params[f"{prefix}.b"]
            h = np.zeros((batch, spec.hidden_size))
            c = np.zeros((batch, spec.hidden_size))
            outs = np.empty((batch, steps, spec.hidden_size))
            caches = []
            for t in range(steps):
                h, c, cache = lstm_cell_forward(layer_in[:, t, :], h, c, wx, wh, b)
                outs[:, t, :] = h
                caches.append(cache)
        else:
            wx, b = params[f"{prefix}.wx"], params[f"{prefix}.b"]
            outs = np.empty((batch, steps, spec.hidden_size))
            caches = []
            for t in range(steps):
                h, cache = ff_cell_forward(layer_in[:, t, :], wx, b)
                outs[:, t, :] = h
                caches.append(cache)
        all_caches.append(caches)
        layer_in = outs
    return layer_in, all_caches


def unroll_backward(
    params: ParamStore,
    specs: list[LayerSpec],
    caches: list,
    d_top: np.ndarray,
    grads: GradStore,
) -> np.ndarray:
    """Backpropagate through the unrolled stack, accumulating into grads.

    ``d_top`` is the gradient of the loss with respect to the top layer's
    per-step outputs. Returns the gradient with respect to the inputs.
    """
    batch, steps, _ = d_top.shape
    d_layer_out = d_top
    for li in range(len(specs) - 1, -1, -1):
        spec = specs[li]
        prefix = f"layer{li}"
        layer_caches = caches[li]
        d_layer_in = np.empty((batch, steps, spec.input_size))
        if spec.kind == "lstm":
            wx, wh = params[f"{prefix}.wx"], params[f"{prefix}.wh"]
            d_h = np.zeros((batch, spec.hidden_size))
            d_c = np.zeros((batch, spec.hidden_size))
            for t in range(steps - 1, -1, -1):
                d_x, d_h, d_c, d_wx, d_wh, d_b = lstm_cell_backward(
                    layer_caches[t], wx, wh, d_h + d_layer_out[:, t, :], d_c
                )
                d_layer_in[:, t, :] = d_x
                grads.accumulate(f"{prefix}.wx", d_wx)
                grads.accumulate(f"{prefix}.wh", d_wh)
                grads.accumulate(f"{prefix}.b", d_b)
        else:
            wx = params[f"{prefix}.wx"]
            for t in range(steps - 1, -1, -1):
                d_x, d_wx, d_b = ff_cell_backward(layer_caches[t], wx, d_layer_out[:, t, :])
                d_layer_in[:, t, :] = d_x
                grads.accumulate(f"{prefix}.wx", d_wx)
                grads.accumulate(f"{prefix}.b", d_b)
        d_layer_out = d_layer_in
    return d_layer_out


def gradient_check(
    loss_fn: Callable[[], float],
    analytic: GradStore,
    params: ParamStore,
    rng: np.random.Generator,
    num_coords: int = 200,
    eps: float = 1e-5,
) -> float:
    """Max relative error between analytic gradients and central differences.

    Samples ``num_coords`` coordinates across all parameters (all of them
    if the model is smaller than that) and perturbs each by +/-eps.
    """
    coords: list[tuple[str, int]] = []
    for name, arr in params.items():
        coords.extend((name, i) for i in range(arr.size))
    if len(coords) > num_coords:
        picks = rng.choice(len(coords), size=num_coords, replace=False)
        coords = [coords[int(i)] for i in picks]

    worst = 0.0
    for name, flat_index in coords:
        arr = params[name]
        original = arr.flat[flat_index]
        arr.flat[flat_index] = original + eps
        plus = loss_fn()
        arr.flat[flat_index] = original - eps
        minus = loss_fn()
        arr.flat[flat_index] = original
        numeric = (plus - minus) / (2.0 * eps)
        exact = analytic[name].flat[flat_index]
        rel = abs(exact - numeric) / max(abs(exact), abs(numeric), 1e-8)
        worst = max(worst, rel)
    return worst

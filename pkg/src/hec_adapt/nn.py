"""Minimal dense feed-forward network engine with manual backpropagation.

Supports exactly what the detectors and the tier-selection policy need:
tanh hidden layers, an identity or softmax head, inverted dropout, MAE and
log-likelihood gradients, and plain per-sample SGD. Weights live in plain
float64 numpy arrays so trained networks can be shared read-only across
threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ACTIVATIONS = ("tanh", "identity", "softmax")
_ACT_CODE = {name: i for i, name in enumerate(ACTIVATIONS)}
_MAGIC = b"HECNET01"


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: output = activation(W @ input + b)."""

    input_dim: int
    output_dim: int
    activation: str = "tanh"

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.input_dim}->{self.output_dim}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


def validate_layer_chain(layers: tuple[LayerSpec, ...]) -> None:
    if not layers:
        raise ValueError("network needs at least one layer")
    for prev, cur in zip(layers, layers[1:]):
        if prev.output_dim != cur.input_dim:
            raise ValueError(
                f"layer chain mismatch: {prev.output_dim} -> {cur.input_dim}"
            )
    for i, layer in enumerate(layers):
        if layer.activation == "softmax" and i != len(layers) - 1:
            raise ValueError("softmax is only allowed as the final layer")


@dataclass
class NetworkParams:
    """Weights and biases for a layer chain. Treated as immutable once a
    training routine returns them."""

    layers: tuple[LayerSpec, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            self.layers,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim


@dataclass
class Gradients:
    """Same block structure as NetworkParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class ForwardTrace:
    """Intermediate values of one forward pass, consumed by the backward ops.

    dropout_scales holds, per hidden layer, the mask already divided by the
    keep probability (inverted dropout); it is None outside training mode.
    """

    layers: tuple[LayerSpec, ...]
    x: np.ndarray
    pre_activations: list[np.ndarray]
    activations: list[np.ndarray]
    outputs: list[np.ndarray]
    dropout_scales: list[np.ndarray] | None

    @property
    def output(self) -> np.ndarray:
        return self.outputs[-1]


@dataclass(frozen=True)
class TrainHyper:
    """Detector training knobs. epochs of None defers to the model spec."""

    learning_rate: float = 0.01
    l2_lambda: float = 1e-4
    dropout_rate: float = 0.3
    epochs: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be nonnegative")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.epochs is not None and self.epochs < 1:
            raise ValueError("epochs must be positive")


def init_network(layers: tuple[LayerSpec, ...] | list[LayerSpec], seed: int) -> NetworkParams:
    """Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.

    Deterministic for a given (layers, seed).
    """
    layers = tuple(layers)
    validate_layer_chain(layers)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for layer in layers:
        bound = np.sqrt(6.0 / (layer.input_dim + layer.output_dim))
        weights.append(rng.uniform(-bound, bound, size=(layer.output_dim, layer.input_dim)))
        biases.append(np.zeros(layer.output_dim))
    return NetworkParams(layers, weights, biases)


def param_count(layers: tuple[LayerSpec, ...] | list[LayerSpec]) -> int:
    """Total number of weights and biases of the layer chain."""
    layers = tuple(layers)
    validate_layer_chain(layers)
    return sum(l.input_dim * l.output_dim + l.output_dim for l in layers)


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def _activate(layer: LayerSpec, z: np.ndarray) -> np.ndarray:
    if layer.activation == "tanh":
        return np.tanh(z)
    if layer.activation == "softmax":
        return softmax(z)
    return z


def forward(
    params: NetworkParams,
    x: np.ndarray,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
    dropout_rate: float = 0.0,
) -> ForwardTrace:
    """Run the network on one input vector.

    Inference mode is deterministic and never consults the RNG. Training
    mode applies inverted dropout (scale by 1/(1-p)) after every hidden
    layer, sampling one mask per hidden layer from ``rng``.
    """
    if mode not in ("infer", "train"):
        raise ValueError(f"mode must be 'infer' or 'train', got {mode!r}")
    x = np.asarray(x, dtype=float)
    if x.shape != (params.input_dim,):
        raise ValueError(f"input shape {x.shape} does not match network input ({params.input_dim},)")
    training = mode == "train" and dropout_rate > 0.0
    if training and rng is None:
        raise ValueError("training mode with dropout needs an rng")

    keep = 1.0 - dropout_rate
    pre, acts, outs = [], [], []
    scales: list[np.ndarray] | None = [] if mode == "train" else None
    h = x
    last = len(params.layers) - 1
    for i, layer in enumerate(params.layers):
        z = params.weights[i] @ h + params.biases[i]
        a = _activate(layer, z)
        if i < last and training:
            scale = (rng.random(layer.output_dim) >= dropout_rate) / keep
            h = a * scale
        else:
            scale = None
            h = a
        if scales is not None and i < last:
            scales.append(scale if scale is not None else np.ones(layer.output_dim))
        pre.append(z)
        acts.append(a)
        outs.append(h)
    return ForwardTrace(params.layers, x, pre, acts, outs, scales)


def _backprop(params: NetworkParams, trace: ForwardTrace, delta_out: np.ndarray,
              l2_lambda: float) -> Gradients:
    """Propagate d(loss)/d(pre-activation of last layer) down the stack.

    L2 regularization applies to weights only, never biases.
    """
    n_layers = len(params.layers)
    gw = [np.empty_like(w) for w in params.weights]
    gb = [np.empty_like(b) for b in params.biases]
    dz = delta_out
    for i in range(n_layers - 1, -1, -1):
        h_in = trace.x if i == 0 else trace.outputs[i - 1]
        gw[i] = np.outer(dz, h_in)
        if l2_lambda:
            gw[i] += l2_lambda * params.weights[i]
        gb[i] = dz.copy()
        if i > 0:
            g = params.weights[i].T @ dz
            if trace.dropout_scales is not None:
                g = g * trace.dropout_scales[i - 1]
            layer = params.layers[i - 1]
            if layer.activation == "tanh":
                dz = g * (1.0 - trace.activations[i - 1] ** 2)
            elif layer.activation == "identity":
                dz = g
            else:
                raise ValueError("softmax below the top layer is unsupported")
    return Gradients(gw, gb)


def backward_mae(params: NetworkParams, trace: ForwardTrace, target: np.ndarray,
                 hyper: TrainHyper) -> Gradients:
    """Gradient of mean(|out - target|) + (l2/2)*||W||^2.

    The MAE subgradient at exactly zero is taken as zero. The trace must
    come from a forward pass on these params (identity head).
    """
    target = np.asarray(target, dtype=float)
    out = trace.output
    if target.shape != out.shape:
        raise ValueError(f"target shape {target.shape} != output shape {out.shape}")
    if trace.layers[-1].activation != "identity":
        raise ValueError("backward_mae expects an identity output layer")
    dz = np.sign(out - target) / out.shape[0]
    return _backprop(params, trace, dz, hyper.l2_lambda)


def backward_logprob(params: NetworkParams, trace: ForwardTrace, action_index: int,
                     scale: float, l2_lambda: float = 0.0) -> Gradients:
    """Gradient of scale * log s[action] + (l2/2)*||W||^2 for a softmax head.

    Callers realize the policy-gradient update by passing
    scale = -(reward - baseline). The trace must be inference-mode.
    """
    if trace.layers[-1].activation != "softmax":
        raise ValueError("backward_logprob expects a softmax output layer")
    if trace.dropout_scales is not None:
        raise ValueError("backward_logprob expects an inference-mode trace")
    s = trace.output
    if not 0 <= action_index < s.shape[0]:
        raise IndexError(f"action index {action_index} out of range for {s.shape[0]} actions")
    onehot = np.zeros_like(s)
    onehot[action_index] = 1.0
    dz = scale * (onehot - s)
    return _backprop(params, trace, dz, l2_lambda)


def sgd_step(params: NetworkParams, grads: Gradients, learning_rate: float) -> NetworkParams:
    """params - learning_rate * grads, elementwise, as a new value."""
    weights = [w - learning_rate * g for w, g in zip(params.weights, grads.weights)]
    biases = [b - learning_rate * g for b, g in zip(params.biases, grads.biases)]
    return NetworkParams(params.layers, weights, biases)


def save_params(params: NetworkParams, path: str | Path) -> None:
    """Flat binary format: magic, uint32 layer count, per layer
    (uint32 in, uint32 out, uint32 activation code), then row-major
    float64 little-endian weights and biases per layer.
    """
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(params.layers)))
        for layer in params.layers:
            fh.write(struct.pack("<III", layer.input_dim, layer.output_dim,
                                 _ACT_CODE[layer.activation]))
        for w, b in zip(params.weights, params.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_params(path: str | Path) -> NetworkParams:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a parameter file (bad magic {magic!r})")
        (n_layers,) = struct.unpack("<I", fh.read(4))
        layers = []
        for _ in range(n_layers):
            din, dout, code = struct.unpack("<III", fh.read(12))
            layers.append(LayerSpec(din, dout, ACTIVATIONS[code]))
        layers = tuple(layers)
        weights, biases = [], []
        for layer in layers:
            w = np.frombuffer(fh.read(8 * layer.input_dim * layer.output_dim), dtype="<f8")
            weights.append(w.reshape(layer.output_dim, layer.input_dim).astype(float))
            b = np.frombuffer(fh.read(8 * layer.output_dim), dtype="<f8")
            biases.append(b.astype(float))
        trailing = fh.read(1)
        if trailing:
            raise ValueError(f"{path}: trailing bytes after parameter blocks")
    return NetworkParams(layers, weights, biases)

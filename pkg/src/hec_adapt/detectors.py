"""The three reconstruction autoencoders and their training loop.

Model capacity grows with the tier: a single-hidden-layer autoencoder for
the device, a three-hidden-layer one for the edge, five hidden layers for
the cloud. All train on normal weeks only, per-sample SGD on mean absolute
reconstruction error with inverted dropout and L2 weight decay; the hot
per-sample step runs on the selected kernel backend.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import backend, nn, scoring
from .data import WeekWindow
from .scoring import WEEK_STEPS, ErrorModel

MODEL_IOT = "AE-IoT"
MODEL_EDGE = "AE-Edge"
MODEL_CLOUD = "AE-Cloud"

FLOP_PER_PARAM = 5  # calibrated against the reference models' published FLOP


@dataclass(frozen=True)
class ModelSpec:
    """Architecture and training budget of one detector."""

    name: str
    dims: tuple[int, ...]
    epochs: int

    def __post_init__(self):
        if len(self.dims) < 2:
            raise ValueError("a model needs at least input and output dims")
        if self.dims[0] != WEEK_STEPS or self.dims[-1] != WEEK_STEPS:
            raise ValueError(f"detector input and output must both be {WEEK_STEPS}")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")

    def layer_specs(self) -> tuple[nn.LayerSpec, ...]:
        layers = []
        for i in range(len(self.dims) - 1):
            activation = "tanh" if i < len(self.dims) - 2 else "identity"
            layers.append(nn.LayerSpec(self.dims[i], self.dims[i + 1], activation))
        return tuple(layers)

    @property
    def param_count(self) -> int:
        return nn.param_count(self.layer_specs())

    @property
    def flop(self) -> int:
        return flop_estimate(self)


def flop_estimate(spec: ModelSpec) -> int:
    """Inference FLOP of the model, as a fixed multiple of its parameter
    count. The multiplier reproduces the published FLOP of all three
    reference architectures within 1%."""
    return round(FLOP_PER_PARAM * spec.param_count)


def standard_specs() -> tuple[ModelSpec, ModelSpec, ModelSpec]:
    """The three reference detectors with their full training budgets."""
    return (
        ModelSpec(MODEL_IOT, (672, 201, 672), epochs=4000),
        ModelSpec(MODEL_EDGE, (672, 336, 201, 336, 672), epochs=6000),
        ModelSpec(MODEL_CLOUD, (672, 470, 336, 201, 336, 470, 672), epochs=8000),
    )


@dataclass
class TrainingLog:
    """Per-epoch mean training loss (train-mode MAE over the epoch)."""

    epoch_losses: list[float] = field(default_factory=list)

    def block_means(self, blocks: int = 10) -> list[float]:
        """Losses averaged over consecutive epoch blocks; the usual view for
        checking that training made progress."""
        n = len(self.epoch_losses)
        if n == 0:
            return []
        blocks = min(blocks, n)
        edges = np.linspace(0, n, blocks + 1).astype(int)
        return [
            float(np.mean(self.epoch_losses[a:b]))
            for a, b in zip(edges[:-1], edges[1:])
            if b > a
        ]


@dataclass
class TrainedDetector:
    spec: ModelSpec
    params: nn.NetworkParams
    error_model: ErrorModel
    training_log: TrainingLog | None = None


def default_hyper(spec: ModelSpec, seed: int = 0) -> nn.TrainHyper:
    """Stock training knobs: lr 0.01 halved every quarter of the budget,
    weight decay 1e-4, dropout 0.3 after every hidden layer."""
    return nn.TrainHyper(
        learning_rate=0.01, l2_lambda=1e-4, dropout_rate=0.3, epochs=spec.epochs, seed=seed
    )


def _check_normal_only(windows: Sequence[WeekWindow]) -> None:
    for win in windows:
        if any(win.day_labels):
            raise ValueError(
                f"window {win.index} contains an anomalous day; detectors train on normal weeks only"
            )


def train_detector(
    spec: ModelSpec,
    train_windows: Sequence[WeekWindow],
    hyper: nn.TrainHyper | None = None,
    seed: int | None = None,
    backend_name: str | None = None,
) -> TrainedDetector:
    """Train the autoencoder (inputs == targets) and fit its error model.

    Per epoch the windows are visited in a fresh seeded shuffle; the
    learning rate halves at each quarter of the epoch budget. Deterministic
    for a given (spec, windows, hyper, seed) on a given backend.
    """
    if not train_windows:
        raise ValueError("train_windows is empty")
    _check_normal_only(train_windows)
    if hyper is None:
        hyper = default_hyper(spec)
    epochs = hyper.epochs if hyper.epochs is not None else spec.epochs
    if seed is None:
        seed = hyper.seed

    params = nn.init_network(spec.layer_specs(), seed)
    _, step = backend.resolve_backend(backend_name)
    work = backend.make_workspace(spec.dims)
    hidden_dims = spec.dims[1:-1]
    rate = hyper.dropout_rate
    keep = 1.0 - rate

    rng = np.random.default_rng(seed + 1)
    inputs = [np.ascontiguousarray(w.values, dtype=float) for w in train_windows]
    log = TrainingLog()
    for epoch in range(epochs):
        lr = hyper.learning_rate * 0.5 ** min(3, (epoch * 4) // epochs)
        order = rng.permutation(len(inputs))
        total = 0.0
        for idx in order:
            x = inputs[idx]
            if rate > 0.0:
                masks = [
                    np.ascontiguousarray((rng.random(d) >= rate) / keep)
                    for d in hidden_dims
                ]
            else:
                masks = None
            total += step(params.weights, params.biases, x, x, masks,
                          lr, hyper.l2_lambda, work)
        log.epoch_losses.append(total / len(inputs))

    errors = np.concatenate([
        np.abs(x - nn.forward(params, x, mode="infer").output) for x in inputs
    ])
    error_model = scoring.fit_error_model(errors)
    return TrainedDetector(spec=spec, params=params, error_model=error_model, training_log=log)


def reconstruct(detector: TrainedDetector, window: np.ndarray) -> np.ndarray:
    """Deterministic inference-mode reconstruction of one week window."""
    window = np.asarray(window, dtype=float)
    if window.shape != (WEEK_STEPS,):
        raise ValueError(f"window must have {WEEK_STEPS} steps, got shape {window.shape}")
    return nn.forward(detector.params, window, mode="infer").output


def save_detector(detector: TrainedDetector, directory: str | Path) -> None:
    """Persist one detector bundle: spec header, parameter blob, and the
    error model as decimal text."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    spec_doc = {
        "name": detector.spec.name,
        "dims": list(detector.spec.dims),
        "epochs": detector.spec.epochs,
        "param_count": detector.spec.param_count,
        "flop": detector.spec.flop,
    }
    (directory / "spec.json").write_text(json.dumps(spec_doc, indent=2) + "\n")
    nn.save_params(detector.params, directory / "params.bin")
    em = detector.error_model
    (directory / "error_model.txt").write_text(
        f"mu {em.mu!r}\nsigma {em.sigma!r}\nthreshold {em.threshold!r}\n"
    )


def load_detector(directory: str | Path) -> TrainedDetector:
    directory = Path(directory)
    spec_doc = json.loads((directory / "spec.json").read_text())
    spec = ModelSpec(spec_doc["name"], tuple(spec_doc["dims"]), spec_doc["epochs"])
    params = nn.load_params(directory / "params.bin")
    fields = {}
    for line in (directory / "error_model.txt").read_text().splitlines():
        key, value = line.split(maxsplit=1)
        fields[key] = float(value)
    error_model = ErrorModel(fields["mu"], fields["sigma"], fields["threshold"])
    return TrainedDetector(spec=spec, params=params, error_model=error_model)

"""Shared test helpers: finite-difference oracles and hand-controllable
detectors."""

from __future__ import annotations

import numpy as np

from hec_adapt import nn
from hec_adapt.detectors import ModelSpec, TrainedDetector
from hec_adapt.scoring import WEEK_STEPS, ErrorModel


def flatten_params(params: nn.NetworkParams) -> np.ndarray:
    return np.concatenate([a.ravel() for a in params.weights + params.biases])


def flatten_grads(grads: nn.Gradients) -> np.ndarray:
    return np.concatenate([a.ravel() for a in grads.weights + grads.biases])


def perturbed(params: nn.NetworkParams, flat_index: int, delta: float) -> nn.NetworkParams:
    """Copy of params with one flattened coordinate shifted by delta."""
    out = params.copy()
    arrays = out.weights + out.biases
    offset = 0
    for arr in arrays:
        if flat_index < offset + arr.size:
            arr.reshape(-1)[flat_index - offset] += delta
            return out
        offset += arr.size
    raise IndexError(flat_index)


def numeric_gradient(loss_fn, params: nn.NetworkParams, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar loss over every parameter."""
    n = flatten_params(params).size
    grad = np.empty(n)
    for i in range(n):
        up = loss_fn(perturbed(params, i, +h))
        down = loss_fn(perturbed(params, i, -h))
        grad[i] = (up - down) / (2.0 * h)
    return grad


def random_net(dims, activations, seed) -> nn.NetworkParams:
    layers = tuple(
        nn.LayerSpec(dims[i], dims[i + 1], activations[i]) for i in range(len(dims) - 1)
    )
    return nn.init_network(layers, seed)


def offset_detector(offsets: np.ndarray, error_model: ErrorModel,
                    name: str = "AE-IoT", epochs: int = 1) -> TrainedDetector:
    """Detector whose network reconstructs x + offsets exactly, so the
    per-step reconstruction error is |offsets| for every window. Gives
    tests full control over day verdicts."""
    offsets = np.asarray(offsets, dtype=float)
    assert offsets.shape == (WEEK_STEPS,)
    spec = ModelSpec(name, (WEEK_STEPS, WEEK_STEPS), epochs=epochs)
    params = nn.NetworkParams(
        layers=spec.layer_specs(),
        weights=[np.eye(WEEK_STEPS)],
        biases=[offsets.copy()],
    )
    return TrainedDetector(spec=spec, params=params, error_model=error_model)


def constant_policy_params(action: int, n_actions: int = 3, state_dim: int = 28):
    """Policy net whose argmax is always `action` (zero weights, a one-hot
    bias bump on the output layer)."""
    from hec_adapt.policy import policy_layer_specs

    layers = policy_layer_specs(state_dim=state_dim, actions=n_actions)
    weights = [np.zeros((l.output_dim, l.input_dim)) for l in layers]
    biases = [np.zeros(l.output_dim) for l in layers]
    biases[-1][action] = 1.0
    return nn.NetworkParams(layers, weights, biases)
